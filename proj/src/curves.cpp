#include "maskx/curves.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace maskx {

namespace {

constexpr double kPixelBlurSigma = 8.0;

std::vector<std::size_t> ranked_indices(std::span<const double> score) {
  std::vector<std::size_t> idx(score.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;  // deterministic tie-break
  });
  return idx;
}

Curve run_curve(const Classifier& model, const LinearRep& rep, const Image& x,
                std::span<const double> mask, int target_class, int steps, CurveMode mode,
                bool insertion) {
  require(steps >= 1, Errc::invalid_argument, "curve needs at least one step");
  require(mask.size() == rep.mask_size(), Errc::shape_mismatch, "mask size mismatch");

  const double p0 = model.predict(x)[std::size_t(target_class)];
  require(p0 > 0.0, Errc::degenerate, "class probability of the input is zero");

  const std::vector<double> coeffs = rep.analyze(x);
  const int C = rep.channels();
  const std::size_t M = rep.mask_size();

  Curve curve;
  curve.fractions.reserve(std::size_t(steps) + 1);
  curve.values.reserve(std::size_t(steps) + 1);

  if (mode == CurveMode::representation) {
    const std::vector<std::size_t> order = ranked_indices(mask);
    std::vector<double> kept(coeffs.size());
    Image y;
    for (int t = 0; t <= steps; ++t) {
      const double p = double(t) / steps;
      const std::size_t n_top = std::size_t(std::llround(p * double(M)));
      // insertion keeps the top-n set, deletion removes it
      std::fill(kept.begin(), kept.end(), 0.0);
      if (insertion) {
        for (std::size_t r = 0; r < n_top; ++r) {
          const std::size_t j = order[r];
          for (int cb = 0; cb < C; ++cb)
            kept[std::size_t(cb) * M + j] = coeffs[std::size_t(cb) * M + j];
        }
      } else {
        kept = coeffs;
        for (std::size_t r = 0; r < n_top; ++r) {
          const std::size_t j = order[r];
          for (int cb = 0; cb < C; ++cb) kept[std::size_t(cb) * M + j] = 0.0;
        }
      }
      rep.synthesize(kept, y);
      curve.fractions.push_back(p);
      curve.values.push_back(model.predict(y)[std::size_t(target_class)] / p0);
    }
    return curve;
  }

  // pixel mode: rank pixels by explanation magnitude, replace the rest (or the
  // top set, for deletion) with a blurred copy of the input
  std::vector<double> masked(coeffs.size());
  for (int cb = 0; cb < C; ++cb)
    for (std::size_t j = 0; j < M; ++j)
      masked[std::size_t(cb) * M + j] = mask[j] * coeffs[std::size_t(cb) * M + j];
  const Image expl = rep.synthesize(masked);

  const std::size_t pix = std::size_t(x.height) * x.width;
  std::vector<double> magnitude(pix, 0.0);
  for (int cb = 0; cb < C; ++cb)
    for (std::size_t p = 0; p < pix; ++p) magnitude[p] += std::abs(expl.plane_ptr(cb)[p]);
  const std::vector<std::size_t> order = ranked_indices(magnitude);

  const Image blurred = gaussian_blur(x, kPixelBlurSigma);
  Image y(x.height, x.width, x.channels);
  for (int t = 0; t <= steps; ++t) {
    const double p = double(t) / steps;
    const std::size_t n_top = std::size_t(std::llround(p * double(pix)));
    y = insertion ? blurred : x;
    const Image& fill = insertion ? x : blurred;
    for (std::size_t r = 0; r < n_top; ++r) {
      const std::size_t j = order[r];
      for (int cb = 0; cb < C; ++cb) y.plane_ptr(cb)[j] = fill.plane_ptr(cb)[j];
    }
    curve.fractions.push_back(p);
    curve.values.push_back(model.predict(y)[std::size_t(target_class)] / p0);
  }
  return curve;
}

}  // namespace

Curve insertion_curve(const Classifier& model, const LinearRep& rep, const Image& x,
                      std::span<const double> mask, int target_class, int steps, CurveMode mode) {
  return run_curve(model, rep, x, mask, target_class, steps, mode, true);
}

Curve deletion_curve(const Classifier& model, const LinearRep& rep, const Image& x,
                     std::span<const double> mask, int target_class, int steps, CurveMode mode) {
  return run_curve(model, rep, x, mask, target_class, steps, mode, false);
}

Curve insertion_curve(const Classifier& model, const ExplanationResult& res, int steps,
                      CurveMode mode) {
  return run_curve(model, *res.rep, res.input, res.mask, res.target_class, steps, mode, true);
}

Curve deletion_curve(const Classifier& model, const ExplanationResult& res, int steps,
                     CurveMode mode) {
  return run_curve(model, *res.rep, res.input, res.mask, res.target_class, steps, mode, false);
}

}  // namespace maskx
