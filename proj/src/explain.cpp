#include "maskx/explain.hpp"

#include <algorithm>
#include <cmath>

#include "maskx/shearlet.hpp"
#include "maskx/wavelet.hpp"

namespace maskx {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

inline double noise_unit(std::uint64_t seed, std::uint64_t sample, std::uint64_t entry) {
  const std::uint64_t z =
      seed + 0x9e3779b97f4a7c15ULL * (sample + 1) + 0xc2b2ae3d27d4eb4fULL * (entry + 1);
  return Rng::to_unit(mix_bits(z));
}

struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  // step_index is 1-based
  void apply(std::span<double> x, std::span<const double> grad, double lr, int step_index,
             double direction) {
    const double bc1 = 1.0 - std::pow(kAdamBeta1, step_index);
    const double bc2 = 1.0 - std::pow(kAdamBeta2, step_index);
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grad[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      x[i] += direction * lr * mh / (std::sqrt(vh) + kAdamEps);
    }
  }
};

void validate_config(const ExplainerConfig& cfg) {
  require(cfg.steps >= 0, Errc::invalid_argument, "steps must be non-negative");
  require(cfg.lr > 0.0, Errc::invalid_argument, "learning rate must be positive");
  require(cfg.mc_samples >= 1, Errc::invalid_argument, "mc_samples must be at least 1");
  require(cfg.lambda1 >= 0.0 && cfg.lambda2 >= 0.0, Errc::invalid_argument,
          "penalty weights must be non-negative");
  require(cfg.area > 0.0 && cfg.area <= 1.0, Errc::invalid_argument, "area must be in (0,1]");
}

struct ObjectiveScratch {
  std::vector<double> masked, sample, noise, adj, grad_sp;
  Image y, grad_img, expl, sign_img;
};

double objective_and_grad_impl(const LinearRep& rep, const Classifier& model,
                               std::span<const double> coeffs, std::span<const double> mask,
                               const PerturbationBatch& noise, double lambda1, double lambda2,
                               int cls, std::span<double> grad, ObjectiveScratch& ws,
                               const char* context) {
  const std::size_t M = rep.mask_size();
  const std::size_t N = rep.coeff_size();
  const int C = rep.channels();
  const std::size_t pix_all = std::size_t(rep.height()) * rep.width() * C;

  ws.masked.resize(N);
  ws.sample.resize(N);
  ws.noise.resize(N);
  ws.adj.resize(N);
  for (int cb = 0; cb < C; ++cb) {
    const double* c = coeffs.data() + std::size_t(cb) * M;
    double* mc = ws.masked.data() + std::size_t(cb) * M;
    for (std::size_t j = 0; j < M; ++j) mc[j] = mask[j] * c[j];
  }

  double l1_spatial = 0.0;
  ws.grad_sp.assign(M, 0.0);
  if (lambda2 != 0.0) {
    rep.synthesize(ws.masked, ws.expl);
    ws.sign_img = Image(rep.height(), rep.width(), C);
    const double inv_p = 1.0 / double(pix_all);
    for (std::size_t p = 0; p < pix_all; ++p) {
      const double v = ws.expl.data[p];
      l1_spatial += std::abs(v);
      ws.sign_img.data[p] = (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0)) * inv_p;
    }
    l1_spatial *= inv_p;
    rep.synthesize_adjoint(ws.sign_img, ws.adj);
    for (int cb = 0; cb < C; ++cb) {
      const double* a = ws.adj.data() + std::size_t(cb) * M;
      const double* c = coeffs.data() + std::size_t(cb) * M;
      for (std::size_t j = 0; j < M; ++j) ws.grad_sp[j] += a[j] * c[j];
    }
  }

  std::fill(grad.begin(), grad.end(), 0.0);
  double value_cls = 0.0;
  for (int i = 0; i < noise.mc_samples(); ++i) {
    noise.fill(i, ws.noise);
    for (int cb = 0; cb < C; ++cb) {
      const std::size_t base = std::size_t(cb) * M;
      for (std::size_t j = 0; j < M; ++j)
        ws.sample[base + j] = ws.masked[base + j] + (1.0 - mask[j]) * ws.noise[base + j];
    }
    rep.synthesize(ws.sample, ws.y);
    const double p_i = model.predict_with_gradient(ws.y, cls, ws.grad_img);
    require(std::isfinite(p_i), Errc::numeric,
            std::string("non-finite classifier output (") + context + ")");
    rep.synthesize_adjoint(ws.grad_img, ws.adj);
    for (int cb = 0; cb < C; ++cb) {
      const std::size_t base = std::size_t(cb) * M;
      const double* c = coeffs.data() + base;
      const double* u = ws.noise.data() + base;
      const double* a = ws.adj.data() + base;
      for (std::size_t j = 0; j < M; ++j) grad[j] += a[j] * (c[j] - u[j]);
    }
    value_cls += p_i;
  }

  const double inv_mc = 1.0 / double(noise.mc_samples());
  double mask_sum = 0.0;
  for (std::size_t j = 0; j < M; ++j) mask_sum += mask[j];
  const double value = value_cls * inv_mc - lambda1 * mask_sum / double(M) - lambda2 * l1_spatial;
  require(std::isfinite(value), Errc::numeric,
          std::string("non-finite objective (") + context + ")");

  const double l1_slope = lambda1 / double(M);
  for (std::size_t j = 0; j < M; ++j)
    grad[j] = grad[j] * inv_mc - l1_slope - lambda2 * ws.grad_sp[j];
  return value;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::shearletx: return "shearletx";
    case Method::waveletx: return "waveletx";
    case Method::cartoonx: return "cartoonx";
    case Method::pixel: return "pixel";
    case Method::smooth_pixel: return "smooth";
  }
  fail(Errc::internal, "unreachable");
}

Method parse_method(const std::string& name) {
  if (name == "shearletx") return Method::shearletx;
  if (name == "waveletx") return Method::waveletx;
  if (name == "cartoonx") return Method::cartoonx;
  if (name == "pixel") return Method::pixel;
  if (name == "smooth" || name == "smooth_pixel") return Method::smooth_pixel;
  fail(Errc::invalid_argument, "unknown method: " + name);
}

ExplainerConfig default_config(Method m) {
  ExplainerConfig cfg;
  cfg.method = m;
  switch (m) {
    case Method::shearletx:
      cfg.lambda1 = 1.0;
      cfg.lambda2 = 2.0;
      break;
    case Method::waveletx:
      cfg.lambda1 = 1.0;
      cfg.lambda2 = 10.0;
      break;
    case Method::cartoonx:
      cfg.lambda1 = 1.0;
      cfg.lambda2 = 0.0;
      break;
    case Method::pixel:
      cfg.lambda1 = 1.0;
      cfg.lambda2 = 0.0;
      break;
    case Method::smooth_pixel:
      cfg.lambda1 = 0.0;
      cfg.lambda2 = 0.0;
      cfg.area = 0.2;
      break;
  }
  return cfg;
}

PerturbationBatch::PerturbationBatch(const LinearRep& rep, std::span<const double> coeffs,
                                     std::uint64_t seed, int mc_samples)
    : rep_(&rep), seed_(seed), mc_(mc_samples) {
  require(mc_samples >= 1, Errc::invalid_argument, "mc_samples must be at least 1");
  require(coeffs.size() == rep.coeff_size(), Errc::shape_mismatch, "coefficient size mismatch");

  const std::size_t M = rep.mask_size();
  const int C = rep.channels();
  const int G = rep.group_count();
  std::vector<double> sum(std::size_t(G), 0.0), sum_sq(std::size_t(G), 0.0);
  std::vector<std::size_t> count(std::size_t(G), 0);
  for (int cb = 0; cb < C; ++cb) {
    const double* c = coeffs.data() + std::size_t(cb) * M;
    for (std::size_t j = 0; j < M; ++j) {
      const int g = rep.group_of(j);
      sum[g] += c[j];
      sum_sq[g] += c[j] * c[j];
      ++count[g];
    }
  }
  stats_.resize(std::size_t(G));
  for (int g = 0; g < G; ++g) {
    const double n = double(std::max<std::size_t>(count[g], 1));
    const double mu = sum[g] / n;
    const double var = std::max(0.0, sum_sq[g] / n - mu * mu);
    stats_[g] = {mu, std::sqrt(var)};
  }
  entry_mu_.resize(M);
  entry_half_.resize(M);
  for (std::size_t j = 0; j < M; ++j) {
    const auto& [mu, sigma] = stats_[rep.group_of(j)];
    entry_mu_[j] = mu;
    entry_half_[j] = sigma;
  }
}

void PerturbationBatch::fill(int sample, std::span<double> out) const {
  require(sample >= 0 && sample < mc_, Errc::invalid_argument, "sample index out of range");
  require(out.size() == rep_->coeff_size(), Errc::shape_mismatch, "noise buffer size mismatch");
  const std::size_t M = rep_->mask_size();
  const int C = rep_->channels();
  for (int cb = 0; cb < C; ++cb) {
    const std::size_t base = std::size_t(cb) * M;
    for (std::size_t j = 0; j < M; ++j) {
      const double half = entry_half_[j];
      if (half == 0.0) {
        out[base + j] = entry_mu_[j];
      } else {
        const double u = noise_unit(seed_, std::uint64_t(sample), base + j);
        out[base + j] = entry_mu_[j] + half * (2.0 * u - 1.0);
      }
    }
  }
}

PerturbationBatch adapted_noise(const LinearRep& rep, std::span<const double> coeffs,
                                std::uint64_t seed, int mc_samples) {
  return PerturbationBatch(rep, coeffs, seed, mc_samples);
}

std::pair<double, std::vector<double>> objective_and_grad(
    const LinearRep& rep, const Classifier& model, const Image& x, std::span<const double> mask,
    const PerturbationBatch& noise, const ExplainerConfig& cfg, int class_index) {
  require(class_index >= 0 && class_index < model.num_classes(), Errc::invalid_argument,
          "invalid class index");
  require(mask.size() == rep.mask_size(), Errc::shape_mismatch, "mask size mismatch");
  const std::vector<double> coeffs = rep.analyze(x);
  std::vector<double> grad(rep.mask_size());
  ObjectiveScratch ws;
  const double lambda2 = (cfg.method == Method::pixel) ? 0.0 : cfg.lambda2;
  const double value = objective_and_grad_impl(rep, model, coeffs, mask, noise, cfg.lambda1,
                                               lambda2, class_index, grad, ws, "objective");
  return {value, std::move(grad)};
}

std::uint64_t per_step_seed(std::uint64_t seed, int step) {
  return Rng::derive_seed(Rng::derive_seed(seed, 0x6d61736bULL), std::uint64_t(step));
}

ExplanationResult optimize_mask(std::shared_ptr<const LinearRep> rep, const Classifier& model,
                                const Image& x, const ExplainerConfig& cfg) {
  validate_config(cfg);
  require(model.input_height() == rep->height() && model.input_width() == rep->width() &&
              model.input_channels() == rep->channels(),
          Errc::shape_mismatch, "model input does not match representation");

  ExplanationResult res;
  res.method = cfg.method;
  res.config = cfg;
  res.rep = rep;
  res.input = x;
  res.target_class = model.argmax(x);
  res.coeffs = rep->analyze(x);

  const std::size_t M = rep->mask_size();
  res.mask.assign(M, 1.0);
  res.loss_trace.resize(std::size_t(cfg.steps));

  const double lambda2 = (cfg.method == Method::pixel) ? 0.0 : cfg.lambda2;

  AdamState adam(M);
  std::vector<double> grad(M);
  ObjectiveScratch ws;
  for (int t = 0; t < cfg.steps; ++t) {
    PerturbationBatch noise(*rep, res.coeffs, per_step_seed(cfg.seed, t), cfg.mc_samples);
    const std::string ctx = "step " + std::to_string(t);
    res.loss_trace[std::size_t(t)] =
        objective_and_grad_impl(*rep, model, res.coeffs, res.mask, noise, cfg.lambda1, lambda2,
                                res.target_class, grad, ws, ctx.c_str());
    adam.apply(res.mask, grad, cfg.lr, t + 1, +1.0);  // ascent
    for (double& v : res.mask) v = std::clamp(v, 0.0, 1.0);
  }

  std::vector<double> masked(rep->coeff_size());
  for (int cb = 0; cb < rep->channels(); ++cb)
    for (std::size_t j = 0; j < M; ++j)
      masked[std::size_t(cb) * M + j] = res.mask[j] * res.coeffs[std::size_t(cb) * M + j];
  res.explanation = rep->synthesize(masked);

  res.prob_before = model.predict(x)[std::size_t(res.target_class)];
  res.prob_after = model.predict(res.explanation)[std::size_t(res.target_class)];
  require(res.prob_before > 0.0, Errc::degenerate, "class probability of the input is zero");
  res.retained_probability = res.prob_after / res.prob_before;
  return res;
}

ExplanationResult pixel_mask_explain(const Classifier& model, const Image& x,
                                     const ExplainerConfig& cfg) {
  require(cfg.method == Method::pixel, Errc::invalid_argument, "pixel_mask_explain: wrong method");
  auto rep = std::make_shared<PixelRep>(x.height, x.width, x.channels);
  return optimize_mask(rep, model, x, cfg);
}

namespace {

// Zero-padded separable Gaussian; symmetric as an operator, so it is its own
// adjoint (used by the smooth-mask gradient).
class ZeroPadBlur {
 public:
  explicit ZeroPadBlur(double sigma) {
    const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
    kernel_.resize(std::size_t(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      kernel_[std::size_t(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
      sum += kernel_[std::size_t(i + radius)];
    }
    for (double& k : kernel_) k /= sum;
    radius_ = radius;
  }

  void apply(const std::vector<double>& in, int h, int w, std::vector<double>& out) const {
    std::vector<double> mid(in.size(), 0.0);
    out.assign(in.size(), 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius_; k <= radius_; ++k) {
          const int xx = x + k;
          if (xx >= 0 && xx < w) acc += kernel_[std::size_t(k + radius_)] * in[std::size_t(y) * w + xx];
        }
        mid[std::size_t(y) * w + x] = acc;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius_; k <= radius_; ++k) {
          const int yy = y + k;
          if (yy >= 0 && yy < h) acc += kernel_[std::size_t(k + radius_)] * mid[std::size_t(yy) * w + x];
        }
        out[std::size_t(y) * w + x] = acc;
      }
  }

 private:
  std::vector<double> kernel_;
  int radius_ = 0;
};

constexpr double kSmoothBlurSigma = 2.0;
constexpr double kAreaPenaltyWeight = 10.0;

// Adjoint of resize_bilinear for single-channel planes: scatters each output
// gradient to its four source corners with the sampling weights.
void bilinear_upsample_adjoint(const std::vector<double>& dout, int out_h, int out_w, int in_h,
                               int in_w, std::vector<double>& din) {
  din.assign(std::size_t(in_h) * in_w, 0.0);
  const double sy_scale = double(in_h) / out_h;
  const double sx_scale = double(in_w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double sy = (y + 0.5) * sy_scale - 0.5;
    sy = std::clamp(sy, 0.0, double(in_h - 1));
    const int y0 = int(sy);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      double sx = (x + 0.5) * sx_scale - 0.5;
      sx = std::clamp(sx, 0.0, double(in_w - 1));
      const int x0 = int(sx);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const double fx = sx - x0;
      const double g = dout[std::size_t(y) * out_w + x];
      din[std::size_t(y0) * in_w + x0] += g * (1 - fy) * (1 - fx);
      din[std::size_t(y0) * in_w + x1] += g * (1 - fy) * fx;
      din[std::size_t(y1) * in_w + x0] += g * fy * (1 - fx);
      din[std::size_t(y1) * in_w + x1] += g * fy * fx;
    }
  }
}

}  // namespace

std::vector<double> smooth_mask_from_latent(std::span<const double> latent, int height,
                                            int width) {
  require(latent.size() == std::size_t(kSmoothLatentGrid) * kSmoothLatentGrid,
          Errc::invalid_argument, "latent grid must be 16x16");
  Image lat(kSmoothLatentGrid, kSmoothLatentGrid, 1);
  std::copy(latent.begin(), latent.end(), lat.data.begin());
  Image up = resize_bilinear(lat, height, width);
  ZeroPadBlur blur(kSmoothBlurSigma);
  std::vector<double> smoothed;
  blur.apply(up.data, height, width, smoothed);
  for (double& v : smoothed) v = 1.0 / (1.0 + std::exp(-v));
  return smoothed;
}

ExplanationResult smooth_pixel_mask_explain(const Classifier& model, const Image& x,
                                            const ExplainerConfig& cfg) {
  require(cfg.method == Method::smooth_pixel, Errc::invalid_argument,
          "smooth_pixel_mask_explain: wrong method");
  validate_config(cfg);
  auto rep = std::make_shared<PixelRep>(x.height, x.width, x.channels);
  require(model.input_height() == x.height && model.input_width() == x.width &&
              model.input_channels() == x.channels,
          Errc::shape_mismatch, "model input does not match image");

  ExplanationResult res;
  res.method = cfg.method;
  res.config = cfg;
  res.rep = rep;
  res.input = x;
  res.target_class = model.argmax(x);
  res.coeffs = rep->analyze(x);
  res.loss_trace.resize(std::size_t(cfg.steps));

  const int H = x.height, W = x.width, C = x.channels;
  const std::size_t pix = std::size_t(H) * W;
  const std::size_t latent_n = std::size_t(kSmoothLatentGrid) * kSmoothLatentGrid;

  std::vector<double> latent(latent_n, 0.0);
  AdamState adam(latent_n);
  ZeroPadBlur blur(kSmoothBlurSigma);

  std::vector<double> mask, dmask(pix), dsquash(pix), dblur, dlatent;
  std::vector<double> noise(rep->coeff_size());
  Image y(H, W, C), grad_img;

  for (int t = 0; t < cfg.steps; ++t) {
    // mask = logistic(blur(upsample(latent)))
    Image lat(kSmoothLatentGrid, kSmoothLatentGrid, 1);
    std::copy(latent.begin(), latent.end(), lat.data.begin());
    Image up = resize_bilinear(lat, H, W);
    std::vector<double> smoothed;
    blur.apply(up.data, H, W, smoothed);
    mask = smoothed;
    for (double& v : mask) v = 1.0 / (1.0 + std::exp(-v));

    double mean_mask = 0.0;
    for (double v : mask) mean_mask += v;
    mean_mask /= double(pix);

    PerturbationBatch batch(*rep, res.coeffs, per_step_seed(cfg.seed, t), cfg.mc_samples);
    std::fill(dmask.begin(), dmask.end(), 0.0);
    double value_cls = 0.0;
    for (int i = 0; i < cfg.mc_samples; ++i) {
      batch.fill(i, noise);
      for (int cb = 0; cb < C; ++cb)
        for (std::size_t p = 0; p < pix; ++p) {
          const std::size_t idx = std::size_t(cb) * pix + p;
          y.data[idx] = x.data[idx] * mask[p] + (1.0 - mask[p]) * noise[idx];
        }
      const double p_i = model.predict_with_gradient(y, res.target_class, grad_img);
      require(std::isfinite(p_i), Errc::numeric,
              "non-finite classifier output (smooth mask step " + std::to_string(t) + ")");
      for (int cb = 0; cb < C; ++cb)
        for (std::size_t p = 0; p < pix; ++p) {
          const std::size_t idx = std::size_t(cb) * pix + p;
          dmask[p] += grad_img.data[idx] * (x.data[idx] - noise[idx]);
        }
      value_cls += p_i;
    }
    const double inv_mc = 1.0 / double(cfg.mc_samples);
    const double loss = -value_cls * inv_mc +
                        kAreaPenaltyWeight * (mean_mask - cfg.area) * (mean_mask - cfg.area);
    require(std::isfinite(loss), Errc::numeric,
            "non-finite loss (smooth mask step " + std::to_string(t) + ")");
    res.loss_trace[std::size_t(t)] = loss;

    const double area_slope = 2.0 * kAreaPenaltyWeight * (mean_mask - cfg.area) / double(pix);
    for (std::size_t p = 0; p < pix; ++p) {
      const double dl_dm = -dmask[p] * inv_mc + area_slope;
      dsquash[p] = dl_dm * mask[p] * (1.0 - mask[p]);  // logistic derivative
    }
    blur.apply(dsquash, H, W, dblur);  // self-adjoint
    bilinear_upsample_adjoint(dblur, H, W, kSmoothLatentGrid, kSmoothLatentGrid, dlatent);
    adam.apply(latent, dlatent, cfg.lr, t + 1, -1.0);  // descent
  }

  res.mask = smooth_mask_from_latent(latent, H, W);
  std::vector<double> masked(rep->coeff_size());
  for (int cb = 0; cb < C; ++cb)
    for (std::size_t p = 0; p < pix; ++p)
      masked[std::size_t(cb) * pix + p] = res.mask[p] * res.coeffs[std::size_t(cb) * pix + p];
  res.explanation = rep->synthesize(masked);

  res.prob_before = model.predict(x)[std::size_t(res.target_class)];
  res.prob_after = model.predict(res.explanation)[std::size_t(res.target_class)];
  require(res.prob_before > 0.0, Errc::degenerate, "class probability of the input is zero");
  res.retained_probability = res.prob_after / res.prob_before;
  return res;
}

std::shared_ptr<const LinearRep> build_rep(Method m, int height, int width, int channels) {
  switch (m) {
    case Method::shearletx:
      return std::make_shared<ShearletRep>(height, width, channels,
                                           default_shearlet_scales(height, width));
    case Method::waveletx:
    case Method::cartoonx: {
      WaveletBasis basis = build_wavelet_basis("db3", default_wavelet_levels(height, width));
      return std::make_shared<WaveletRep>(std::move(basis), height, width, channels);
    }
    case Method::pixel:
    case Method::smooth_pixel:
      return std::make_shared<PixelRep>(height, width, channels);
  }
  fail(Errc::internal, "unreachable");
}

ExplanationResult explain(const Classifier& model, const Image& x, const ExplainerConfig& cfg) {
  if (cfg.method == Method::smooth_pixel) return smooth_pixel_mask_explain(model, x, cfg);
  auto rep = build_rep(cfg.method, x.height, x.width, x.channels);
  return optimize_mask(std::move(rep), model, x, cfg);
}

}  // namespace maskx
