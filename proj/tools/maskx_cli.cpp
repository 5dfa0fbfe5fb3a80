// maskx command-line front end. Links only the C API (maskx.h); file
// orchestration, manifests, and CSV output live here.

#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "maskx.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

class CliError : public std::runtime_error {
 public:
  CliError(int exit_code, const std::string& msg) : std::runtime_error(msg), code(exit_code) {}
  int code;
};

void check(maskx_status status, const std::string& what) {
  if (status == MASKX_OK) return;
  const int code = (status == MASKX_ERR_DEGENERATE) ? 2 : 1;
  throw CliError(code, what + ": " + maskx_last_error());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw CliError(1, "cannot write " + path.string());
  out << content;
  if (!out.good()) throw CliError(1, "write failed for " + path.string());
}

// manifest.json carries only reproducible fields; wall-clock timings go to the
// timings.log sidecar so reruns are byte-identical.
void write_manifest(const fs::path& dir, const std::string& command, uint64_t seed,
                    const json& flags, const std::vector<std::string>& artifacts,
                    const json& extra = json::object()) {
  json m;
  m["schema_version"] = kSchemaVersion;
  m["library_version"] = maskx_version();
  m["command"] = command;
  m["seed"] = seed;
  m["flags"] = flags;
  m["artifacts"] = artifacts;
  m["timings_file"] = "timings.log";
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

void write_timings(const fs::path& dir, const Timer& timer) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "wall_clock_seconds %.3f\n", timer.seconds());
  write_file(dir / "timings.log", buf);
}

int env_threads() {
  const char* v = std::getenv("MASKX_THREADS");
  if (!v) return 1;
  const int n = std::atoi(v);
  return n >= 1 ? n : 1;
}

struct ImageHandle {
  maskx_image* p = nullptr;
  ImageHandle() = default;
  explicit ImageHandle(maskx_image* q) : p(q) {}
  ImageHandle(ImageHandle&& o) noexcept : p(o.p) { o.p = nullptr; }
  ImageHandle& operator=(ImageHandle&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  ImageHandle(const ImageHandle&) = delete;
  ~ImageHandle() { maskx_image_free(p); }
};
struct ModelHandle {
  maskx_model* p = nullptr;
  ~ModelHandle() { maskx_model_free(p); }
};
struct ResultHandle {
  maskx_result* p = nullptr;
  ResultHandle() = default;
  ResultHandle(ResultHandle&& o) noexcept : p(o.p) { o.p = nullptr; }
  ResultHandle& operator=(ResultHandle&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  ResultHandle(const ResultHandle&) = delete;
  ~ResultHandle() { maskx_result_free(p); }
};

maskx_method method_from_name(const std::string& name) {
  if (name == "shearletx") return MASKX_METHOD_SHEARLETX;
  if (name == "waveletx") return MASKX_METHOD_WAVELETX;
  if (name == "cartoonx") return MASKX_METHOD_CARTOONX;
  if (name == "pixel") return MASKX_METHOD_PIXEL;
  if (name == "smooth" || name == "smooth_pixel") return MASKX_METHOD_SMOOTH_PIXEL;
  throw CliError(1, "invalid method: " + name);
}

// Explain flags shared by `explain` and `curves`; negative sentinel = default.
struct ExplainFlags {
  std::string method = "shearletx";
  double lambda1 = -1.0, lambda2 = -1.0, lr = -1.0, area = -1.0;
  int steps = -1, mc = -1;
  uint64_t seed = 0;

  maskx_explain_config resolve() const {
    maskx_explain_config cfg{};
    check(maskx_explain_config_defaults(method_from_name(method), &cfg), "config");
    if (lambda1 >= 0.0) cfg.lambda1 = lambda1;
    if (lambda2 >= 0.0) cfg.lambda2 = lambda2;
    if (lr > 0.0) cfg.lr = lr;
    if (area > 0.0) cfg.area = area;
    if (steps >= 0) cfg.steps = steps;
    if (mc >= 1) cfg.mc_samples = mc;
    cfg.seed = seed;
    return cfg;
  }

  json echo(const maskx_explain_config& cfg) const {
    return json{{"method", method},         {"lambda1", cfg.lambda1}, {"lambda2", cfg.lambda2},
                {"steps", cfg.steps},       {"lr", cfg.lr},           {"mc", cfg.mc_samples},
                {"area", cfg.area},         {"seed", cfg.seed}};
  }
};

void add_explain_flags(CLI::App* cmd, ExplainFlags& f, const char* steps_flag = "--steps") {
  cmd->add_option("--method", f.method, "shearletx|waveletx|cartoonx|pixel|smooth")
      ->default_val("shearletx");
  cmd->add_option("--lambda1", f.lambda1, "mask sparsity weight (method default if unset)");
  cmd->add_option("--lambda2", f.lambda2, "spatial energy weight (method default if unset)");
  cmd->add_option(steps_flag, f.steps, "optimizer steps (default 300)");
  cmd->add_option("--lr", f.lr, "Adam learning rate (default 0.1)");
  cmd->add_option("--mc", f.mc, "Monte Carlo samples per step (default 16)");
  cmd->add_option("--area", f.area, "area target for the smooth mask (default 0.2)");
  cmd->add_option("--seed", f.seed, "random seed")->default_val(0);
}

struct BenchRow {
  std::string method;
  std::string image;
  maskx_metrics m{};
};

std::vector<std::string> dataset_filenames(const fs::path& dir) {
  std::ifstream csv(dir / "labels.csv");
  if (!csv.good()) throw CliError(1, "cannot open " + (dir / "labels.csv").string());
  std::string line;
  std::getline(csv, line);  // header
  std::vector<std::string> names;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    names.push_back(line.substr(0, line.find(',')));
  }
  return names;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (int t = 0; t < std::min(threads, n); ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---- subcommands ----------------------------------------------------------

int cmd_dataset(const std::string& out_dir, int n, uint64_t seed) {
  Timer timer;
  fs::create_directories(out_dir);
  check(maskx_dataset_generate(out_dir.c_str(), n, seed), "dataset generation");
  std::vector<std::string> artifacts = {"labels.csv"};
  char name[32];
  for (int i = 0; i < n; ++i) {
    std::snprintf(name, sizeof(name), "sample_%05d.png", i);
    artifacts.push_back(name);
  }
  write_manifest(out_dir, "dataset", seed, json{{"n", n}, {"out", out_dir}}, artifacts);
  write_timings(out_dir, timer);
  std::printf("wrote %d samples to %s\n", n, out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_path, int epochs, uint64_t seed,
              double holdout) {
  Timer timer;
  ModelHandle model;
  maskx_train_stats stats{};
  check(maskx_model_train_dir(data_dir.c_str(), epochs, seed, holdout, &model.p, &stats),
        "training");
  check(maskx_model_save(model.p, out_path.c_str()), "checkpoint save");

  const fs::path out_file(out_path);
  const fs::path dir = out_file.has_parent_path() ? out_file.parent_path() : fs::path(".");
  json extra;
  extra["train_accuracy"] = stats.train_accuracy;
  extra["test_accuracy"] = stats.test_accuracy;
  extra["initial_loss"] = stats.initial_loss;
  extra["final_loss"] = stats.final_loss;
  extra["epochs_run"] = stats.epochs_run;
  write_manifest(dir, "train", seed,
                 json{{"data", data_dir},
                      {"out", out_path},
                      {"epochs", epochs},
                      {"holdout", holdout}},
                 {out_file.filename().string()}, extra);
  write_timings(dir, timer);
  std::printf("trained %d epochs: train_acc %.3f test_acc %.3f -> %s\n", stats.epochs_run,
              stats.train_accuracy, stats.test_accuracy, out_path.c_str());
  return 0;
}

int cmd_explain(const std::string& model_path, const std::string& image_path,
                const ExplainFlags& flags, const std::string& out_dir) {
  Timer timer;
  fs::create_directories(out_dir);
  ModelHandle model;
  check(maskx_model_load(model_path.c_str(), &model.p), "model load");
  ImageHandle image;
  check(maskx_image_load(image_path.c_str(), maskx_model_input_height(model.p),
                         maskx_model_input_width(model.p), &image.p),
        "image load");

  const maskx_explain_config cfg = flags.resolve();
  ResultHandle res;
  check(maskx_explain(model.p, image.p, &cfg, &res.p), "explanation");

  ImageHandle expl, heat;
  check(maskx_result_explanation(res.p, &expl.p), "explanation image");
  check(maskx_result_mask_heatmap(res.p, &heat.p), "mask heatmap");
  const fs::path dir(out_dir);
  check(maskx_image_save_png(expl.p, (dir / "explanation.png").string().c_str()), "png save");
  check(maskx_image_save_png(heat.p, (dir / "mask.png").string().c_str()), "png save");

  int n_trace = 0;
  const double* trace = maskx_result_loss_trace(res.p, &n_trace);
  std::string csv = "step,objective\n";
  for (int i = 0; i < n_trace; ++i) csv += std::to_string(i) + "," + fmt(trace[i]) + "\n";
  write_file(dir / "loss_trace.csv", csv);

  char* report_json = nullptr;
  check(maskx_result_metrics_json(res.p, model.p, &report_json), "metrics");
  write_file(dir / "report.json", report_json);
  const json report = json::parse(report_json);
  maskx_string_free(report_json);

  write_manifest(dir, "explain", cfg.seed,
                 json{{"model", model_path}, {"image", image_path}, {"out", out_dir},
                      {"config", flags.echo(cfg)}},
                 {"explanation.png", "mask.png", "report.json", "loss_trace.csv"});
  write_timings(dir, timer);

  if (report["degenerate"].get<bool>()) {
    std::fprintf(stderr, "degenerate metrics: %s\n",
                 report["degenerate_reason"].get<std::string>().c_str());
    return 2;
  }
  std::printf("%s: retained probability %.4f (class %d) -> %s\n", flags.method.c_str(),
              maskx_result_retained_probability(res.p), maskx_result_target_class(res.p),
              out_dir.c_str());
  return 0;
}

int cmd_bench(const std::string& model_path, const std::string& data_dir, int n,
              const std::string& methods_csv, uint64_t seed, const std::string& out_dir) {
  Timer timer;
  fs::create_directories(out_dir);
  ModelHandle model;
  check(maskx_model_load(model_path.c_str(), &model.p), "model load");

  const auto filenames = dataset_filenames(data_dir);
  if (int(filenames.size()) < n)
    throw CliError(1, "dataset has only " + std::to_string(filenames.size()) + " images, need " +
                          std::to_string(n));

  std::vector<std::string> methods;
  std::stringstream ss(methods_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) methods.push_back(tok);
  }
  if (methods.empty()) throw CliError(1, "no methods given");
  for (const auto& m : methods) method_from_name(m);  // validate early

  const int tasks = n * int(methods.size());
  std::vector<BenchRow> rows(static_cast<std::size_t>(tasks));
  parallel_for(tasks, env_threads(), [&](int task) {
    const int img_idx = task / int(methods.size());
    const std::string& method = methods[std::size_t(task % int(methods.size()))];

    ImageHandle image;
    const std::string path = (fs::path(data_dir) / filenames[std::size_t(img_idx)]).string();
    check(maskx_image_load(path.c_str(), maskx_model_input_height(model.p),
                           maskx_model_input_width(model.p), &image.p),
          "image load");

    maskx_explain_config cfg{};
    check(maskx_explain_config_defaults(method_from_name(method), &cfg), "config");
    cfg.seed = seed ^ uint64_t(img_idx);  // per-image stream, schedule independent
    ResultHandle res;
    check(maskx_explain(model.p, image.p, &cfg, &res.p), "explanation");

    BenchRow& row = rows[std::size_t(task)];
    row.method = method;
    row.image = filenames[std::size_t(img_idx)];
    check(maskx_result_metrics(res.p, model.p, &row.m), "metrics");
  });

  std::string csv =
      "method,image,hallucination_score,cp_entropy,cp_l1,cp_l1_pixel,retained_probability\n";
  for (const auto& row : rows)
    csv += row.method + "," + row.image + "," + fmt(row.m.hallucination_score) + "," +
           fmt(row.m.cp_entropy) + "," + fmt(row.m.cp_l1) + "," + fmt(row.m.cp_l1_pixel) + "," +
           fmt(row.m.retained_probability) + "\n";
  const fs::path dir(out_dir);
  write_file(dir / "results.csv", csv);

  json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["n"] = n;
  bool any_degenerate = false;
  for (const auto& method : methods) {
    double hs = 0, ce = 0, cl = 0, cp = 0, rp = 0;
    int count = 0;
    for (const auto& row : rows) {
      if (row.method != method) continue;
      hs += row.m.hallucination_score;
      ce += row.m.cp_entropy;
      cl += row.m.cp_l1;
      cp += row.m.cp_l1_pixel;
      rp += row.m.retained_probability;
      any_degenerate |= row.m.degenerate != 0;
      ++count;
    }
    summary["methods"][method] = {
        {"mean_hallucination_score", hs / count}, {"mean_cp_entropy", ce / count},
        {"mean_cp_l1", cl / count},               {"mean_cp_l1_pixel", cp / count},
        {"mean_retained_probability", rp / count}};
  }
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  write_manifest(dir, "bench", seed,
                 json{{"model", model_path}, {"data", data_dir}, {"n", n},
                      {"methods", methods_csv}, {"out", out_dir}},
                 {"results.csv", "summary.json"});
  write_timings(dir, timer);

  if (any_degenerate) {
    std::fprintf(stderr, "degenerate metrics encountered; see results.csv\n");
    return 2;
  }
  std::printf("benchmarked %d images x %zu methods -> %s\n", n, methods.size(), out_dir.c_str());
  return 0;
}

int cmd_curves(const std::string& model_path, const std::string& image_path,
               const ExplainFlags& flags, const std::string& mode, int curve_steps,
               const std::string& out_dir) {
  Timer timer;
  fs::create_directories(out_dir);
  ModelHandle model;
  check(maskx_model_load(model_path.c_str(), &model.p), "model load");
  ImageHandle image;
  check(maskx_image_load(image_path.c_str(), maskx_model_input_height(model.p),
                         maskx_model_input_width(model.p), &image.p),
        "image load");

  const maskx_explain_config cfg = flags.resolve();
  ResultHandle res;
  check(maskx_explain(model.p, image.p, &cfg, &res.p), "explanation");

  const maskx_curve_mode cmode =
      (mode == "pixel") ? MASKX_CURVE_PIXEL : MASKX_CURVE_REPRESENTATION;
  if (mode != "pixel" && mode != "representation")
    throw CliError(1, "invalid mode: " + mode + " (expected representation or pixel)");

  std::vector<double> fr(std::size_t(curve_steps) + 1), val(std::size_t(curve_steps) + 1);
  const fs::path dir(out_dir);
  for (int insertion : {1, 0}) {
    check(maskx_curve(res.p, model.p, insertion, cmode, curve_steps, fr.data(), val.data()),
          "curve");
    std::string csv = "fraction,retained_probability\n";
    for (std::size_t i = 0; i < fr.size(); ++i) csv += fmt(fr[i]) + "," + fmt(val[i]) + "\n";
    write_file(dir / (insertion ? "insertion.csv" : "deletion.csv"), csv);
  }

  write_manifest(dir, "curves", cfg.seed,
                 json{{"model", model_path}, {"image", image_path}, {"mode", mode},
                      {"curve_steps", curve_steps}, {"out", out_dir},
                      {"config", flags.echo(cfg)}},
                 {"insertion.csv", "deletion.csv"});
  write_timings(dir, timer);
  std::printf("curves (%s, %s) -> %s\n", flags.method.c_str(), mode.c_str(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mask explanations for image classifiers (shearlet/wavelet/pixel)"};
  app.require_subcommand(1);

  // dataset
  auto* dataset = app.add_subcommand("dataset", "generate the synthetic striped-patch dataset");
  std::string ds_out;
  int ds_n = 100;
  uint64_t ds_seed = 0;
  dataset->add_option("--out", ds_out, "output directory")->required();
  dataset->add_option("--n", ds_n, "number of samples")->required();
  dataset->add_option("--seed", ds_seed, "random seed")->default_val(0);

  // train
  auto* train = app.add_subcommand("train", "train the built-in classifier");
  std::string tr_data, tr_out;
  int tr_epochs = 20;
  uint64_t tr_seed = 0;
  double tr_holdout = 0.2;
  train->add_option("--data", tr_data, "dataset directory")->required();
  train->add_option("--out", tr_out, "checkpoint path")->required();
  train->add_option("--epochs", tr_epochs, "training epochs")->default_val(20);
  train->add_option("--seed", tr_seed, "random seed")->default_val(0);
  train->add_option("--holdout", tr_holdout, "held-out fraction")->default_val(0.2);

  // explain
  auto* explain = app.add_subcommand("explain", "compute a mask explanation for one image");
  std::string ex_model, ex_image, ex_out;
  ExplainFlags ex_flags;
  explain->add_option("--model", ex_model, "model checkpoint")->required();
  explain->add_option("--image", ex_image, "input image (PNG or PGM)")->required();
  explain->add_option("--out", ex_out, "output directory")->required();
  add_explain_flags(explain, ex_flags);

  // bench
  auto* bench = app.add_subcommand("bench", "batch explanation benchmark over a dataset");
  std::string be_model, be_data, be_methods = "shearletx,pixel,smooth", be_out;
  int be_n = 20;
  uint64_t be_seed = 0;
  bench->add_option("--model", be_model, "model checkpoint")->required();
  bench->add_option("--data", be_data, "dataset directory")->required();
  bench->add_option("--n", be_n, "number of images")->required();
  bench->add_option("--methods", be_methods, "comma-separated method list");
  bench->add_option("--seed", be_seed, "random seed")->default_val(0);
  bench->add_option("--out", be_out, "output directory")->required();

  // curves
  auto* curves = app.add_subcommand("curves", "insertion/deletion curves for one image");
  std::string cu_model, cu_image, cu_mode = "representation", cu_out;
  int cu_steps = 50;
  ExplainFlags cu_flags;
  curves->add_option("--model", cu_model, "model checkpoint")->required();
  curves->add_option("--image", cu_image, "input image")->required();
  curves->add_option("--mode", cu_mode, "representation|pixel")->default_val("representation");
  curves->add_option("--steps", cu_steps, "curve grid steps")->default_val(50);
  curves->add_option("--out", cu_out, "output directory")->required();
  add_explain_flags(curves, cu_flags, "--opt-steps");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dataset->parsed()) return cmd_dataset(ds_out, ds_n, ds_seed);
    if (train->parsed()) return cmd_train(tr_data, tr_out, tr_epochs, tr_seed, tr_holdout);
    if (explain->parsed()) return cmd_explain(ex_model, ex_image, ex_flags, ex_out);
    if (bench->parsed()) return cmd_bench(be_model, be_data, be_n, be_methods, be_seed, be_out);
    if (curves->parsed()) return cmd_curves(cu_model, cu_image, cu_flags, cu_mode, cu_steps, cu_out);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
