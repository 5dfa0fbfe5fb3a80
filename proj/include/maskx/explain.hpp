#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maskx/linear_rep.hpp"
#include "maskx/model.hpp"

namespace maskx {

enum class Method { shearletx, waveletx, cartoonx, pixel, smooth_pixel };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct ExplainerConfig {
  Method method = Method::shearletx;
  double lambda1 = 1.0;  // mask sparsity weight
  double lambda2 = 2.0;  // spatial energy weight
  int steps = 300;
  double lr = 0.1;
  int mc_samples = 16;
  double area = 0.2;  // smooth_pixel only
  std::uint64_t seed = 0;
};

// Method defaults: shearletx (1, 2), waveletx (1, 10), cartoonx (1, 0),
// pixel (1, spatial term unused), smooth_pixel (area 0.2).
ExplainerConfig default_config(Method m);

// Coefficient-shaped uniform noise adapted per group: entries of group g are
// drawn from [mu_g - sigma_g, mu_g + sigma_g], where mu/sigma are the
// empirical mean and (population) standard deviation of the image's
// coefficients in that group. Draws are materialized on demand as a pure
// function of (seed, sample, entry), so batches need no storage and replay
// identically under any threading.
class PerturbationBatch {
 public:
  PerturbationBatch(const LinearRep& rep, std::span<const double> coeffs, std::uint64_t seed,
                    int mc_samples);

  int mc_samples() const { return mc_; }
  std::uint64_t seed() const { return seed_; }
  void fill(int sample, std::span<double> out) const;

  double group_mean(int g) const { return stats_[std::size_t(g)].first; }
  double group_sigma(int g) const { return stats_[std::size_t(g)].second; }

 private:
  const LinearRep* rep_;
  std::uint64_t seed_;
  int mc_;
  std::vector<std::pair<double, double>> stats_;  // per group (mu, sigma)
  std::vector<double> entry_mu_, entry_half_;     // per mask entry
};

PerturbationBatch adapted_noise(const LinearRep& rep, std::span<const double> coeffs,
                                std::uint64_t seed, int mc_samples);

// Value and mask gradient of
//   (1/mc) sum_u Phi_c(synth(m.c + (1-m).u)) - l1 mean(m) - l2 mean|synth(m.c)|
// with the gradient assembled analytically through synthesize_adjoint;
// sign(0) = 0 in the spatial subgradient.
std::pair<double, std::vector<double>> objective_and_grad(
    const LinearRep& rep, const Classifier& model, const Image& x, std::span<const double> mask,
    const PerturbationBatch& noise, const ExplainerConfig& cfg, int class_index);

struct ExplanationResult {
  Method method = Method::shearletx;
  ExplainerConfig config;
  int target_class = 0;
  double prob_before = 0.0;
  double prob_after = 0.0;
  double retained_probability = 0.0;  // Phi_c(explanation)/Phi_c(x), perturbation-free
  std::vector<double> mask;
  Image explanation;  // synthesize(mask . coeffs), values may leave [0,1]
  std::vector<double> loss_trace;
  std::shared_ptr<const LinearRep> rep;
  std::vector<double> coeffs;  // analyze(input)
  Image input;
};

// Noise seed used at optimizer step t.
std::uint64_t per_step_seed(std::uint64_t seed, int step);

// Adam ascent (beta1 0.9, beta2 0.999, eps 1e-8) on an all-ones mask, clamped
// to [0,1] after every step; fresh noise batch each step, target class is the
// model's argmax on x.
ExplanationResult optimize_mask(std::shared_ptr<const LinearRep> rep, const Classifier& model,
                                const Image& x, const ExplainerConfig& cfg);

ExplanationResult pixel_mask_explain(const Classifier& model, const Image& x,
                                     const ExplainerConfig& cfg);

inline constexpr int kSmoothLatentGrid = 16;

// mask = logistic(gaussian_smooth(bilinear_upsample(latent))).
std::vector<double> smooth_mask_from_latent(std::span<const double> latent, int height, int width);

// Simplified area-constrained baseline:
//   loss = -(1/mc) sum Phi_c(x.m + (1-m).u) + 10 (mean(m) - area)^2
// optimized over the 16x16 latent grid with the same Adam defaults.
ExplanationResult smooth_pixel_mask_explain(const Classifier& model, const Image& x,
                                            const ExplainerConfig& cfg);

// Builds the representation for cfg.method and dispatches.
ExplanationResult explain(const Classifier& model, const Image& x, const ExplainerConfig& cfg);

std::shared_ptr<const LinearRep> build_rep(Method m, int height, int width, int channels);

}  // namespace maskx
