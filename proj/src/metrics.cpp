#include "maskx/metrics.hpp"

#include <cmath>

#include "json.hpp"

namespace maskx {

double retained_probability(const Classifier& model, const Image& x, const Image& x_hat, int cls) {
  require(cls >= 0 && cls < model.num_classes(), Errc::invalid_argument, "invalid class");
  const double before = model.predict(x)[std::size_t(cls)];
  require(before > 0.0, Errc::degenerate, "class probability of the input is zero");
  return model.predict(x_hat)[std::size_t(cls)] / before;
}

namespace {

// extent = exp(entropy) of the distribution induced by the squared entries;
// computed as E / exp(sum e ln e / E) to avoid normalizing twice.
double extent(std::span<const double> values_sq_sum_terms, double total) {
  double acc = 0.0;
  for (double e : values_sq_sum_terms)
    if (e > 0.0) acc += e * std::log(e);
  const double entropy = std::log(total) - acc / total;
  return std::exp(entropy);
}

}  // namespace

double cp_entropy_retained_info(std::span<const double> coeffs, std::span<const double> mask,
                                int channels) {
  const std::size_t M = mask.size();
  require(coeffs.size() == M * std::size_t(channels), Errc::shape_mismatch,
          "coefficients do not match mask");
  std::vector<double> orig_sq(coeffs.size()), masked_sq(coeffs.size());
  double orig_total = 0.0, masked_total = 0.0;
  for (int cb = 0; cb < channels; ++cb) {
    const std::size_t base = std::size_t(cb) * M;
    for (std::size_t j = 0; j < M; ++j) {
      const double c = coeffs[base + j];
      const double mc = mask[j] * c;
      orig_sq[base + j] = c * c;
      masked_sq[base + j] = mc * mc;
      orig_total += c * c;
      masked_total += mc * mc;
    }
  }
  require(orig_total > 0.0, Errc::degenerate, "coefficient energy is zero");
  require(masked_total > 0.0, Errc::degenerate, "masked coefficient energy is zero");
  return extent(masked_sq, masked_total) / extent(orig_sq, orig_total);
}

double cp_l1_retained_info(std::span<const double> coeffs, std::span<const double> mask,
                           int channels) {
  const std::size_t M = mask.size();
  require(coeffs.size() == M * std::size_t(channels), Errc::shape_mismatch,
          "coefficients do not match mask");
  double num = 0.0, den = 0.0;
  for (int cb = 0; cb < channels; ++cb) {
    const std::size_t base = std::size_t(cb) * M;
    for (std::size_t j = 0; j < M; ++j) {
      den += std::abs(coeffs[base + j]);
      num += std::abs(mask[j] * coeffs[base + j]);
    }
  }
  require(den > 0.0, Errc::degenerate, "coefficient l1 norm is zero");
  return num / den;
}

double cp_l1_pixel_retained_info(const Image& x, const Image& x_hat) {
  require(x.same_shape(x_hat), Errc::shape_mismatch, "image shapes differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += std::abs(x.data[i]);
    num += std::abs(x_hat.data[i]);
  }
  require(den > 0.0, Errc::degenerate, "input image l1 norm is zero");
  return num / den;
}

double cp_score(double retained_prob, double retained_info) {
  require(retained_info > 0.0, Errc::degenerate, "retained information is zero");
  return retained_prob / retained_info;
}

bool MetricsReport::all_finite() const {
  for (double v : {retained_probability, retained_info_entropy, retained_info_l1,
                   retained_info_l1_pixel, cp_entropy, cp_l1, cp_l1_pixel, hallucination_score})
    if (!std::isfinite(v)) return false;
  return true;
}

MetricsReport evaluate_explanation(const Classifier& model, const ExplanationResult& res,
                                   int hs_tolerance) {
  MetricsReport r;
  r.method = method_name(res.method);
  r.seed = res.config.seed;
  r.lambda1 = res.config.lambda1;
  r.lambda2 = res.config.lambda2;
  r.lr = res.config.lr;
  r.area = res.config.area;
  r.steps = res.config.steps;
  r.mc_samples = res.config.mc_samples;
  r.target_class = res.target_class;
  r.prob_before = res.prob_before;
  r.prob_after = res.prob_after;
  r.retained_probability = res.retained_probability;
  r.hs_tolerance = hs_tolerance;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto guard = [&](auto&& fn, double& out) {
    try {
      out = fn();
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate) throw;
      out = nan;
      r.degenerate = true;
      if (!r.degenerate_reason.empty()) r.degenerate_reason += "; ";
      r.degenerate_reason += e.what();
    }
  };

  const int ch = res.rep->channels();
  guard([&] { return cp_entropy_retained_info(res.coeffs, res.mask, ch); },
        r.retained_info_entropy);
  guard([&] { return cp_l1_retained_info(res.coeffs, res.mask, ch); }, r.retained_info_l1);
  guard([&] { return cp_l1_pixel_retained_info(res.input, res.explanation); },
        r.retained_info_l1_pixel);
  guard([&] { return cp_score(r.retained_probability, r.retained_info_entropy); }, r.cp_entropy);
  guard([&] { return cp_score(r.retained_probability, r.retained_info_l1); }, r.cp_l1);
  guard([&] { return cp_score(r.retained_probability, r.retained_info_l1_pixel); }, r.cp_l1_pixel);

  const EdgeMap img_edges = detect_edges(res.input);
  const EdgeMap expl_edges = detect_edges(clamp01(res.explanation));
  r.image_edges = img_edges.count();
  r.explanation_edges = expl_edges.count();
  guard([&] { return hallucination_score(expl_edges, img_edges, hs_tolerance); },
        r.hallucination_score);
  return r;
}

std::string metrics_report_json(const MetricsReport& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["method"] = r.method;
  j["seed"] = r.seed;
  j["config"] = {{"lambda1", r.lambda1}, {"lambda2", r.lambda2},     {"lr", r.lr},
                 {"area", r.area},       {"steps", r.steps},         {"mc_samples", r.mc_samples}};
  j["target_class"] = r.target_class;
  j["prob_before"] = r.prob_before;
  j["prob_after"] = r.prob_after;
  j["retained_probability"] = r.retained_probability;
  j["retained_probability_definition"] = "perturbation_free";
  j["retained_info_entropy"] = r.retained_info_entropy;
  j["retained_info_l1"] = r.retained_info_l1;
  j["retained_info_l1_pixel"] = r.retained_info_l1_pixel;
  j["cp_entropy"] = r.cp_entropy;
  j["cp_l1"] = r.cp_l1;
  j["cp_l1_pixel"] = r.cp_l1_pixel;
  j["hallucination_score"] = r.hallucination_score;
  j["hallucination_tolerance"] = r.hs_tolerance;
  j["explanation_edges"] = r.explanation_edges;
  j["image_edges"] = r.image_edges;
  j["degenerate"] = r.degenerate;
  j["degenerate_reason"] = r.degenerate_reason;
  return j.dump(2) + "\n";
}

}  // namespace maskx
