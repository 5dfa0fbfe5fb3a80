#pragma once

#include <memory>
#include <vector>

#include "maskx/fft.hpp"
#include "maskx/linear_rep.hpp"

namespace maskx {

// Band-limited cone-adapted shearlet filter bank, built directly in the
// frequency domain from Meyer-type windows.
//
// The frequency plane is split into a horizontal and a vertical cone plus a
// lowpass. Scale rings crossfade dyadically along the cone axis coordinate
// r = max(|xi1|, |xi2|); within scale j the cone is subdivided by 2^sl_j + 1
// shear windows per cone, with the two windows straddling the diagonal seam
// shared between the cones. Each sine/cosine crossfade squares to a partition
// of unity, so the bank is a tight frame: sum_k |psi_k|^2 == 1 up to rounding.
//
// Channel order: lowpass, then per scale (coarse to fine): horizontal cone
// shears -n..n (|s| = n are the seam filters), vertical cone shears
// -(n-1)..(n-1), where n = 2^shear_levels[scale]. Channel count is therefore
// K = 1 + sum_j 2^(shear_levels[j]+2).
struct ShearletSystem {
  struct ChannelInfo {
    int scale;  // -1 for the lowpass
    int shear;
    int cone;  // 0 lowpass, 1 horizontal, 2 vertical (seam filters count as 1)
  };

  int height = 0, width = 0, scales = 0;
  std::vector<int> shear_levels;  // per scale, coarse to fine
  int channels = 0;               // K
  std::vector<ChannelInfo> info;
  std::vector<double> filters;       // [K][H][W/2+1], real, even in frequency
  std::vector<double> inv_filters;   // filters / dual_weights
  std::vector<double> dual_weights;  // [H][W/2+1], sum_k filter^2
  double min_dual_weight = 0.0;
  std::shared_ptr<RealFft2D> fft;
};

// height/width powers of two >= 32, 1 <= scales <= 6.
// shear_levels[j] = ceil((j+1)/2); at 256x256 with 4 scales this gives K = 49.
ShearletSystem build_shearlet_system(int height, int width, int scales);

int shearlet_channel_count(int scales);
int default_shearlet_scales(int height, int width);

class ShearletRep final : public LinearRep {
 public:
  ShearletRep(std::shared_ptr<const ShearletSystem> sys, int channels);
  ShearletRep(int height, int width, int channels, int scales)
      : ShearletRep(std::make_shared<ShearletSystem>(build_shearlet_system(height, width, scales)),
                    channels) {}

  int height() const override { return sys_->height; }
  int width() const override { return sys_->width; }
  int channels() const override { return img_channels_; }
  std::string name() const override { return "shearlet"; }
  std::size_t mask_size() const override {
    return std::size_t(sys_->channels) * sys_->height * sys_->width;
  }

  void analyze(const Image& x, std::span<double> coeffs) const override;
  void synthesize(std::span<const double> coeffs, Image& out) const override;
  void synthesize_adjoint(const Image& y, std::span<double> coeffs) const override;

  // One group per (scale, shearing) channel, lowpass included.
  int group_count() const override { return sys_->channels; }
  int group_of(std::size_t mask_index) const override {
    return int(mask_index / (std::size_t(sys_->height) * sys_->width));
  }

  // Per-pixel max over the K mask channels.
  Image mask_heatmap(std::span<const double> mask) const override {
    require(mask.size() == mask_size(), Errc::shape_mismatch, "mask size mismatch");
    const std::size_t pix = std::size_t(sys_->height) * sys_->width;
    Image out(sys_->height, sys_->width, 1);
    for (int k = 0; k < sys_->channels; ++k)
      for (std::size_t p = 0; p < pix; ++p)
        out.data[p] = std::max(out.data[p], mask[std::size_t(k) * pix + p]);
    return out;
  }

  const ShearletSystem& system() const { return *sys_; }
  using LinearRep::analyze;
  using LinearRep::synthesize;
  using LinearRep::synthesize_adjoint;

 private:
  std::shared_ptr<const ShearletSystem> sys_;
  int img_channels_;
};

}  // namespace maskx
