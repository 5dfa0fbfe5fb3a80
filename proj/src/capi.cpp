#include "maskx.h"

#include <cstring>
#include <string>

#include "maskx/curves.hpp"
#include "maskx/dataset.hpp"
#include "maskx/explain.hpp"
#include "maskx/linear_rep.hpp"
#include "maskx/metrics.hpp"
#include "maskx/model.hpp"
#include "maskx/version.hpp"

using namespace maskx;

struct maskx_image {
  Image img;
};

struct maskx_model {
  TinyConvNet net;
};

struct maskx_result {
  ExplanationResult res;
};

namespace {

thread_local std::string g_last_error;

maskx_status status_of(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return MASKX_ERR_INVALID_ARGUMENT;
    case Errc::io: return MASKX_ERR_IO;
    case Errc::format: return MASKX_ERR_FORMAT;
    case Errc::shape_mismatch: return MASKX_ERR_SHAPE_MISMATCH;
    case Errc::numeric: return MASKX_ERR_NUMERIC;
    case Errc::degenerate: return MASKX_ERR_DEGENERATE;
    case Errc::unsupported: return MASKX_ERR_UNSUPPORTED;
    case Errc::internal: return MASKX_ERR_INTERNAL;
  }
  return MASKX_ERR_INTERNAL;
}

template <typename Fn>
maskx_status guarded(Fn&& fn) {
  try {
    fn();
    return MASKX_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MASKX_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MASKX_ERR_INTERNAL;
  }
}

maskx_status require_arg(bool ok, const char* msg) {
  if (ok) return MASKX_OK;
  g_last_error = msg;
  return MASKX_ERR_INVALID_ARGUMENT;
}

Method to_method(maskx_method m) {
  switch (m) {
    case MASKX_METHOD_SHEARLETX: return Method::shearletx;
    case MASKX_METHOD_WAVELETX: return Method::waveletx;
    case MASKX_METHOD_CARTOONX: return Method::cartoonx;
    case MASKX_METHOD_PIXEL: return Method::pixel;
    case MASKX_METHOD_SMOOTH_PIXEL: return Method::smooth_pixel;
  }
  fail(Errc::invalid_argument, "unknown method enum value");
}

ExplainerConfig to_config(const maskx_explain_config& c) {
  ExplainerConfig cfg;
  cfg.method = to_method(c.method);
  cfg.lambda1 = c.lambda1;
  cfg.lambda2 = c.lambda2;
  cfg.steps = c.steps;
  cfg.lr = c.lr;
  cfg.mc_samples = c.mc_samples;
  cfg.area = c.area;
  cfg.seed = c.seed;
  return cfg;
}

}  // namespace

extern "C" {

const char* maskx_version(void) { return MASKX_VERSION; }

const char* maskx_last_error(void) { return g_last_error.c_str(); }

maskx_status maskx_image_load(const char* path, int target_h, int target_w, maskx_image** out) {
  if (auto s = require_arg(path && out, "null argument")) return s;
  return guarded([&] {
    std::optional<std::pair<int, int>> target;
    if (target_h > 0 && target_w > 0) target = {target_h, target_w};
    *out = new maskx_image{load_image(path, target)};
  });
}

maskx_status maskx_image_create(int height, int width, int channels, const double* data,
                                maskx_image** out) {
  if (auto s = require_arg(data && out, "null argument")) return s;
  return guarded([&] {
    Image img(height, width, channels);
    std::memcpy(img.data.data(), data, img.size() * sizeof(double));
    *out = new maskx_image{std::move(img)};
  });
}

maskx_status maskx_image_save_png(const maskx_image* img, const char* path) {
  if (auto s = require_arg(img && path, "null argument")) return s;
  return guarded([&] { save_image(img->img, path); });
}

int maskx_image_height(const maskx_image* img) { return img ? img->img.height : 0; }
int maskx_image_width(const maskx_image* img) { return img ? img->img.width : 0; }
int maskx_image_channels(const maskx_image* img) { return img ? img->img.channels : 0; }
const double* maskx_image_data(const maskx_image* img) {
  return img ? img->img.data.data() : nullptr;
}
void maskx_image_free(maskx_image* img) { delete img; }

maskx_status maskx_dataset_generate(const char* out_dir, int n, uint64_t seed) {
  if (auto s = require_arg(out_dir != nullptr, "null argument")) return s;
  return guarded([&] {
    Rng rng(seed);
    write_dataset(out_dir, generate_dataset(rng, n));
  });
}

maskx_status maskx_dataset_sample(uint64_t seed, int index, maskx_image** image, int* label) {
  if (auto s = require_arg(image && label && index >= 0, "bad argument")) return s;
  return guarded([&] {
    SyntheticSample s = generate_sample(seed, index);
    *label = s.label;
    *image = new maskx_image{std::move(s.image)};
  });
}

maskx_status maskx_model_train_dir(const char* data_dir, int epochs, uint64_t seed,
                                   double holdout_fraction, maskx_model** out,
                                   maskx_train_stats* stats) {
  if (auto s = require_arg(data_dir && out, "null argument")) return s;
  if (auto s = require_arg(holdout_fraction >= 0.0 && holdout_fraction < 1.0,
                           "holdout_fraction must be in [0,1)"))
    return s;
  return guarded([&] {
    auto samples = load_dataset(data_dir);
    const std::size_t n_hold = std::size_t(double(samples.size()) * holdout_fraction);
    const std::size_t n_train = samples.size() - n_hold;
    std::span<const SyntheticSample> train_set(samples.data(), n_train);
    std::span<const SyntheticSample> heldout(samples.data() + n_train, n_hold);

    const Image& first = samples.front().image;
    auto model = std::make_unique<maskx_model>(
        maskx_model{TinyConvNet(first.height, first.width, first.channels)});
    Rng rng(seed);
    model->net.init_weights(rng);
    TrainStats ts = train(model->net, train_set, epochs, rng, {}, heldout);
    if (stats) {
      stats->initial_loss = ts.initial_loss;
      stats->final_loss = ts.epoch_losses.empty() ? ts.initial_loss : ts.epoch_losses.back();
      stats->train_accuracy = ts.train_accuracy;
      stats->test_accuracy = ts.test_accuracy;
      stats->epochs_run = ts.epochs_run;
    }
    *out = model.release();
  });
}

maskx_status maskx_model_save(const maskx_model* model, const char* path) {
  if (auto s = require_arg(model && path, "null argument")) return s;
  return guarded([&] { model->net.save(path); });
}

maskx_status maskx_model_load(const char* path, maskx_model** out) {
  if (auto s = require_arg(path && out, "null argument")) return s;
  return guarded([&] { *out = new maskx_model{TinyConvNet::load(path)}; });
}

int maskx_model_num_classes(const maskx_model* m) { return m ? m->net.num_classes() : 0; }
int maskx_model_input_height(const maskx_model* m) { return m ? m->net.input_height() : 0; }
int maskx_model_input_width(const maskx_model* m) { return m ? m->net.input_width() : 0; }
int maskx_model_input_channels(const maskx_model* m) { return m ? m->net.input_channels() : 0; }

maskx_status maskx_model_predict(const maskx_model* model, const maskx_image* img, double* probs) {
  if (auto s = require_arg(model && img && probs, "null argument")) return s;
  return guarded([&] {
    const std::vector<double> p = model->net.predict(img->img);
    std::memcpy(probs, p.data(), p.size() * sizeof(double));
  });
}

void maskx_model_free(maskx_model* model) { delete model; }

maskx_status maskx_explain_config_defaults(maskx_method method, maskx_explain_config* cfg) {
  if (auto s = require_arg(cfg != nullptr, "null argument")) return s;
  return guarded([&] {
    const ExplainerConfig d = default_config(to_method(method));
    cfg->method = method;
    cfg->lambda1 = d.lambda1;
    cfg->lambda2 = d.lambda2;
    cfg->steps = d.steps;
    cfg->lr = d.lr;
    cfg->mc_samples = d.mc_samples;
    cfg->area = d.area;
    cfg->seed = d.seed;
  });
}

maskx_status maskx_explain(const maskx_model* model, const maskx_image* img,
                           const maskx_explain_config* cfg, maskx_result** out) {
  if (auto s = require_arg(model && img && cfg && out, "null argument")) return s;
  return guarded([&] {
    *out = new maskx_result{explain(model->net, img->img, to_config(*cfg))};
  });
}

maskx_status maskx_result_explanation(const maskx_result* res, maskx_image** out) {
  if (auto s = require_arg(res && out, "null argument")) return s;
  return guarded([&] { *out = new maskx_image{res->res.explanation}; });
}

maskx_status maskx_result_mask_heatmap(const maskx_result* res, maskx_image** out) {
  if (auto s = require_arg(res && out, "null argument")) return s;
  return guarded([&] { *out = new maskx_image{res->res.rep->mask_heatmap(res->res.mask)}; });
}

int maskx_result_target_class(const maskx_result* res) {
  return res ? res->res.target_class : -1;
}

double maskx_result_retained_probability(const maskx_result* res) {
  return res ? res->res.retained_probability : 0.0;
}

const double* maskx_result_loss_trace(const maskx_result* res, int* n) {
  if (!res) return nullptr;
  if (n) *n = int(res->res.loss_trace.size());
  return res->res.loss_trace.data();
}

maskx_status maskx_result_metrics(const maskx_result* res, const maskx_model* model,
                                  maskx_metrics* out) {
  if (auto s = require_arg(res && model && out, "null argument")) return s;
  return guarded([&] {
    const MetricsReport r = evaluate_explanation(model->net, res->res);
    out->retained_probability = r.retained_probability;
    out->cp_entropy = r.cp_entropy;
    out->cp_l1 = r.cp_l1;
    out->cp_l1_pixel = r.cp_l1_pixel;
    out->hallucination_score = r.hallucination_score;
    out->degenerate = r.degenerate ? 1 : 0;
  });
}

maskx_status maskx_result_metrics_json(const maskx_result* res, const maskx_model* model,
                                       char** out) {
  if (auto s = require_arg(res && model && out, "null argument")) return s;
  return guarded([&] {
    const std::string json = metrics_report_json(evaluate_explanation(model->net, res->res));
    char* buf = new char[json.size() + 1];
    std::memcpy(buf, json.c_str(), json.size() + 1);
    *out = buf;
  });
}

void maskx_result_free(maskx_result* res) { delete res; }

void maskx_string_free(char* s) { delete[] s; }

maskx_status maskx_curve(const maskx_result* res, const maskx_model* model, int insertion,
                         maskx_curve_mode mode, int steps, double* fractions, double* values) {
  if (auto s = require_arg(res && model && fractions && values, "null argument")) return s;
  return guarded([&] {
    const CurveMode m =
        (mode == MASKX_CURVE_REPRESENTATION) ? CurveMode::representation : CurveMode::pixel;
    const Curve c = insertion ? insertion_curve(model->net, res->res, steps, m)
                              : deletion_curve(model->net, res->res, steps, m);
    std::memcpy(fractions, c.fractions.data(), c.fractions.size() * sizeof(double));
    std::memcpy(values, c.values.data(), c.values.size() * sizeof(double));
  });
}

maskx_status maskx_coeffs_dump(const maskx_image* img, maskx_method method, const char* path) {
  if (auto s = require_arg(img && path, "null argument")) return s;
  return guarded([&] {
    auto rep = build_rep(to_method(method), img->img.height, img->img.width, img->img.channels);
    dump_coeffs(*rep, rep->analyze(img->img), path);
  });
}

}  // extern "C"
