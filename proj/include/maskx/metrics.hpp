#pragma once

#include <span>
#include <string>

#include "maskx/edges.hpp"
#include "maskx/explain.hpp"

namespace maskx {

// Phi_c(x_hat) / Phi_c(x); may exceed 1. Errc::degenerate when Phi_c(x) = 0.
double retained_probability(const Classifier& model, const Image& x, const Image& x_hat, int cls);

// exp(H{|m c|^2}) / exp(H{|c|^2}) with natural-log Shannon entropy of the
// normalized squared magnitudes; 0 log 0 = 0. The mask is shared across the
// color blocks of `coeffs`. Errc::degenerate when the masked energy is zero.
double cp_entropy_retained_info(std::span<const double> coeffs, std::span<const double> mask,
                                int channels);

// |m c|_1 / |c|_1, in [0,1] for masks in [0,1].
double cp_l1_retained_info(std::span<const double> coeffs, std::span<const double> mask,
                           int channels);

// |x_hat|_1 / |x|_1 in pixel space.
double cp_l1_pixel_retained_info(const Image& x, const Image& x_hat);

double cp_score(double retained_prob, double retained_info);

struct MetricsReport {
  std::string method;
  std::uint64_t seed = 0;
  double lambda1 = 0, lambda2 = 0, lr = 0, area = 0;
  int steps = 0, mc_samples = 0;
  int target_class = 0;
  double prob_before = 0, prob_after = 0;
  double retained_probability = 0;
  double retained_info_entropy = 0, retained_info_l1 = 0, retained_info_l1_pixel = 0;
  double cp_entropy = 0, cp_l1 = 0, cp_l1_pixel = 0;
  double hallucination_score = 0;
  int hs_tolerance = 1;
  std::size_t explanation_edges = 0, image_edges = 0;
  bool degenerate = false;
  std::string degenerate_reason;

  bool all_finite() const;
};

// Full metric bundle for a finished explanation. Retained image information is
// measured in the explanation's own representation; edge maps are taken on the
// input and on the explanation clamped to [0,1]. Degenerate sub-metrics set
// the flag and reason instead of throwing.
MetricsReport evaluate_explanation(const Classifier& model, const ExplanationResult& res,
                                   int hs_tolerance = 1);

// JSON object (schema_version 1); non-finite values serialize as null.
std::string metrics_report_json(const MetricsReport& report);

}  // namespace maskx
