#pragma once

#include <algorithm>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "maskx/image.hpp"

namespace maskx {

// Linear image representation with an exact adjoint of its synthesis map.
//
// Coefficients are stored color-major: `channels` consecutive blocks of
// mask_size() values, so that a single mask entry j applies to coefficient
// c*mask_size()+j in every color block. synthesize(analyze(x)) must return x
// up to the representation's reconstruction tolerance, and synthesize_adjoint
// must satisfy <synthesize(c), y> == <c, synthesize_adjoint(y)>.
class LinearRep {
 public:
  virtual ~LinearRep() = default;

  virtual int height() const = 0;
  virtual int width() const = 0;
  virtual int channels() const = 0;
  virtual std::string name() const = 0;

  // Mask entries (shared across color channels).
  virtual std::size_t mask_size() const = 0;
  std::size_t coeff_size() const { return mask_size() * std::size_t(channels()); }

  virtual void analyze(const Image& x, std::span<double> coeffs) const = 0;
  virtual void synthesize(std::span<const double> coeffs, Image& out) const = 0;
  virtual void synthesize_adjoint(const Image& y, std::span<double> coeffs) const = 0;

  // Perturbation-adaptation groups: group_of(j) indexes the coefficient group
  // whose empirical statistics drive the noise for mask entry j.
  virtual int group_count() const = 0;
  virtual int group_of(std::size_t mask_index) const = 0;

  // Single-channel rendering of a mask for visualization (max-projection for
  // multi-channel coefficient layouts).
  virtual Image mask_heatmap(std::span<const double> mask) const = 0;

  std::vector<double> analyze(const Image& x) const {
    std::vector<double> c(coeff_size());
    analyze(x, c);
    return c;
  }
  Image synthesize(std::span<const double> coeffs) const {
    Image out(height(), width(), channels());
    synthesize(coeffs, out);
    return out;
  }
  std::vector<double> synthesize_adjoint(const Image& y) const {
    std::vector<double> c(coeff_size());
    synthesize_adjoint(y, c);
    return c;
  }

 protected:
  void check_image(const Image& x) const {
    require(x.height == height() && x.width == width() && x.channels == channels(),
            Errc::shape_mismatch, name() + ": image shape mismatch");
  }
  void check_coeffs(std::size_t n) const {
    require(n == coeff_size(), Errc::shape_mismatch, name() + ": coefficient size mismatch");
  }
};

// Identity representation: coefficients are the pixels themselves.
class PixelRep final : public LinearRep {
 public:
  PixelRep(int height, int width, int channels)
      : height_(height), width_(width), channels_(channels) {
    require(height >= 8 && width >= 8, Errc::invalid_argument, "pixel rep: image too small");
    require(channels == 1 || channels == 3, Errc::invalid_argument, "pixel rep: bad channels");
  }

  int height() const override { return height_; }
  int width() const override { return width_; }
  int channels() const override { return channels_; }
  std::string name() const override { return "pixel"; }
  std::size_t mask_size() const override { return std::size_t(height_) * width_; }

  void analyze(const Image& x, std::span<double> coeffs) const override {
    check_image(x);
    check_coeffs(coeffs.size());
    std::memcpy(coeffs.data(), x.data.data(), coeffs.size() * sizeof(double));
  }
  void synthesize(std::span<const double> coeffs, Image& out) const override {
    check_coeffs(coeffs.size());
    out = Image(height_, width_, channels_);
    std::memcpy(out.data.data(), coeffs.data(), coeffs.size() * sizeof(double));
  }
  void synthesize_adjoint(const Image& y, std::span<double> coeffs) const override {
    analyze(y, coeffs);
  }

  int group_count() const override { return 1; }
  int group_of(std::size_t) const override { return 0; }

  using LinearRep::analyze;
  using LinearRep::synthesize;
  using LinearRep::synthesize_adjoint;

  Image mask_heatmap(std::span<const double> mask) const override {
    require(mask.size() == mask_size(), Errc::shape_mismatch, "mask size mismatch");
    Image out(height_, width_, 1);
    std::copy(mask.begin(), mask.end(), out.data.begin());
    return out;
  }

 private:
  int height_, width_, channels_;
};

// Debug dump: 16-byte header (magic "MXC1", plane count, H, W as u32 LE)
// followed by plane-major float64 LE data. For multi-channel images the color
// blocks are written as additional planes.
void dump_coeffs(const LinearRep& rep, std::span<const double> coeffs, const std::string& path);

}  // namespace maskx
