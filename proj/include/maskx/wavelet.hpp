#pragma once

#include <memory>
#include <string>
#include <vector>

#include "maskx/linear_rep.hpp"

namespace maskx {

// Orthonormal compactly-supported wavelet filter pair with periodic boundary
// handling. The synthesis operator is the literal transpose of analysis, so
// for these families reconstruction is exact and synthesize_adjoint == analyze.
struct WaveletBasis {
  std::string family;
  int levels = 0;
  std::vector<double> lowpass;   // h, sums to sqrt(2)
  std::vector<double> highpass;  // g[t] = (-1)^t h[L-1-t], sums to 0
};

// Families: haar (= db1), db2, db3, db4.
WaveletBasis build_wavelet_basis(const std::string& family, int levels);

// Critically-sampled pyramid stored in the nested block layout: after each
// level the current approximation block splits into quadrants
// [approx | detail_v; detail_h | detail_d]. Level 1 is the finest scale.
struct WaveletPyramid {
  int height = 0, width = 0, channels = 1, levels = 0;
  std::string family;
  std::vector<double> data;  // color-major planes of height*width

  double* plane_ptr(int c) { return data.data() + std::size_t(c) * height * width; }
  const double* plane_ptr(int c) const { return data.data() + std::size_t(c) * height * width; }
};

struct SubbandRect {
  int y0 = 0, x0 = 0, h = 0, w = 0;
};

// Block geometry within a plane; level in [1, levels], orientation in {0,1,2}
// (vertical, horizontal, diagonal details).
SubbandRect approx_rect(int height, int width, int levels);
SubbandRect detail_rect(int height, int width, int level, int orientation);

WaveletPyramid dwt_analyze(const WaveletBasis& basis, const Image& img);
Image dwt_synthesize(const WaveletBasis& basis, const WaveletPyramid& pyr);

// In-place plane transforms used by the pyramid and the LinearRep wrapper.
void dwt_analyze_plane(const WaveletBasis& basis, int height, int width, double* plane);
void dwt_synthesize_plane(const WaveletBasis& basis, int height, int width, double* plane);

// LinearRep over the wavelet pyramid; mask entries are pyramid positions.
// Noise-adaptation groups: group 0 is the approximation block, then one group
// per detail scale from coarsest (1) to finest (levels).
class WaveletRep final : public LinearRep {
 public:
  WaveletRep(WaveletBasis basis, int height, int width, int channels);

  int height() const override { return height_; }
  int width() const override { return width_; }
  int channels() const override { return channels_; }
  std::string name() const override { return "wavelet:" + basis_.family; }
  std::size_t mask_size() const override { return std::size_t(height_) * width_; }

  void analyze(const Image& x, std::span<double> coeffs) const override;
  void synthesize(std::span<const double> coeffs, Image& out) const override;
  void synthesize_adjoint(const Image& y, std::span<double> coeffs) const override;

  int group_count() const override { return basis_.levels + 1; }
  int group_of(std::size_t mask_index) const override { return group_map_[mask_index]; }

  // Each subband upsampled (nearest) to full resolution, max across subbands.
  Image mask_heatmap(std::span<const double> mask) const override;

  const WaveletBasis& basis() const { return basis_; }
  using LinearRep::analyze;
  using LinearRep::synthesize;
  using LinearRep::synthesize_adjoint;

 private:
  WaveletBasis basis_;
  int height_, width_, channels_;
  std::vector<int> group_map_;
};

// Default decomposition depth: 5 levels when the dimensions allow, fewer on
// images with less dyadic structure.
int default_wavelet_levels(int height, int width);

}  // namespace maskx
