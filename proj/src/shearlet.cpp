#include "maskx/shearlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace maskx {

namespace {

// Meyer auxiliary polynomial: smooth ramp with v(x) + v(1-x) = 1.
double meyer_v(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * x * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x);
}

double rise(double x) { return std::sin(0.5 * std::numbers::pi * meyer_v(x)); }
double fall(double x) { return std::cos(0.5 * std::numbers::pi * meyer_v(x)); }

// Dyadic ring window on t = log2(r); ring j is centered at c_j = j - (J-1)
// and spans [c_j - 1, c_j + 1]. rise^2 + fall^2 = 1 in the overlaps.
double ring_window(int j, int scales, double t) {
  const double c = double(j) - double(scales - 1);
  if (t <= c - 1.0 || t >= c + 1.0) return 0.0;
  return (t <= c) ? rise(t - (c - 1.0)) : fall(t - c);
}

// Shear window for index s out of n = 2^sl, on the cone slope sigma in [-1,1].
// Centered at s/n with half-width 1/n.
double shear_window(int s, int n, double sigma) {
  const double center = double(s) / n;
  const double u = (sigma - center) * n;
  if (u <= -1.0 || u >= 1.0) return 0.0;
  return (u <= 0.0) ? rise(u + 1.0) : fall(u);
}

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

int shearlet_channel_count(int scales) {
  int k = 1;
  for (int j = 0; j < scales; ++j) k += 1 << (((j + 2) / 2) + 2);
  return k;
}

int default_shearlet_scales(int height, int width) {
  const int extent = std::min(height, width);
  int log2e = 0;
  while ((1 << (log2e + 1)) <= extent) ++log2e;
  return std::clamp(log2e - 4, 1, 6);
}

ShearletSystem build_shearlet_system(int height, int width, int scales) {
  require(is_pow2(height) && is_pow2(width) && height >= 32 && width >= 32, Errc::unsupported,
          "shearlet system requires power-of-two dimensions >= 32");
  require(scales >= 1 && scales <= 6, Errc::invalid_argument, "scales must be in [1, 6]");

  ShearletSystem sys;
  sys.height = height;
  sys.width = width;
  sys.scales = scales;
  for (int j = 0; j < scales; ++j) sys.shear_levels.push_back((j + 2) / 2);  // ceil((j+1)/2)
  sys.channels = shearlet_channel_count(scales);

  sys.info.push_back({-1, 0, 0});
  for (int j = 0; j < scales; ++j) {
    const int n = 1 << sys.shear_levels[j];
    for (int s = -n; s <= n; ++s) sys.info.push_back({j, s, 1});
    for (int s = -(n - 1); s <= n - 1; ++s) sys.info.push_back({j, s, 2});
  }
  require(int(sys.info.size()) == sys.channels, Errc::internal, "channel enumeration mismatch");

  const int cols = width / 2 + 1;
  const std::size_t plane = std::size_t(height) * cols;
  sys.filters.assign(std::size_t(sys.channels) * plane, 0.0);
  sys.dual_weights.assign(plane, 0.0);

  // Per-scale channel offsets for the two cones.
  std::vector<int> cone_h_base(scales), cone_v_base(scales);
  {
    int k = 1;
    for (int j = 0; j < scales; ++j) {
      const int n = 1 << sys.shear_levels[j];
      cone_h_base[j] = k;
      k += 2 * n + 1;
      cone_v_base[j] = k;
      k += 2 * n - 1;
    }
  }

  for (int iy = 0; iy < height; ++iy) {
    const int wy = (iy <= height / 2) ? iy : iy - height;
    for (int ix = 0; ix < cols; ++ix) {
      const double xi1 = 2.0 * ix / width;
      // On the Nyquist column the rows a and H-a are both stored in the
      // half-spectrum and must carry equal values for the real inverse FFT to
      // see a Hermitian product; the reflected evaluation point keeps the
      // partition of unity exact.
      const double xi2 = (ix == width / 2) ? std::abs(2.0 * wy / height) : 2.0 * wy / height;
      const std::size_t p = std::size_t(iy) * cols + ix;

      const double a1 = std::abs(xi1), a2 = std::abs(xi2);
      const double r = std::max(a1, a2);
      double high_sq = 0.0;
      if (r > 0.0) {
        const double t = std::log2(r);
        const bool cone_h = a1 >= a2;
        const double sigma = cone_h ? xi2 / xi1 : xi1 / xi2;
        for (int j = 0; j < scales; ++j) {
          const double b = ring_window(j, scales, t);
          if (b == 0.0) continue;
          const int n = 1 << sys.shear_levels[j];
          if (cone_h) {
            for (int s = -n; s <= n; ++s) {
              const double v = b * shear_window(s, n, sigma);
              if (v != 0.0) {
                sys.filters[std::size_t(cone_h_base[j] + (s + n)) * plane + p] = v;
                high_sq += v * v;
              }
            }
          } else {
            for (int s = -(n - 1); s <= n - 1; ++s) {
              const double v = b * shear_window(s, n, sigma);
              if (v != 0.0) {
                sys.filters[std::size_t(cone_v_base[j] + (s + n - 1)) * plane + p] = v;
                high_sq += v * v;
              }
            }
            // Seam filters live in the horizontal cone's enumeration but pick
            // up their other half from this cone.
            for (int s : {-n, n}) {
              const double v = b * shear_window(s, n, sigma);
              if (v != 0.0) {
                sys.filters[std::size_t(cone_h_base[j] + (s + n)) * plane + p] = v;
                high_sq += v * v;
              }
            }
          }
        }
      }
      // Lowpass completes the partition of unity exactly.
      sys.filters[p] = std::sqrt(std::max(0.0, 1.0 - high_sq));
    }
  }

  sys.min_dual_weight = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < plane; ++p) {
    double w = 0.0;
    for (int k = 0; k < sys.channels; ++k) {
      const double f = sys.filters[std::size_t(k) * plane + p];
      w += f * f;
    }
    sys.dual_weights[p] = w;
    sys.min_dual_weight = std::min(sys.min_dual_weight, w);
  }
  require(sys.min_dual_weight > 0.0, Errc::internal, "shearlet frame does not cover the plane");

  sys.inv_filters.resize(sys.filters.size());
  for (int k = 0; k < sys.channels; ++k)
    for (std::size_t p = 0; p < plane; ++p)
      sys.inv_filters[std::size_t(k) * plane + p] =
          sys.filters[std::size_t(k) * plane + p] / sys.dual_weights[p];

  sys.fft = std::make_shared<RealFft2D>(height, width);
  return sys;
}

ShearletRep::ShearletRep(std::shared_ptr<const ShearletSystem> sys, int channels)
    : sys_(std::move(sys)), img_channels_(channels) {
  require(img_channels_ == 1 || img_channels_ == 3, Errc::invalid_argument,
          "shearlet rep: bad channel count");
}

void ShearletRep::analyze(const Image& x, std::span<double> coeffs) const {
  check_image(x);
  check_coeffs(coeffs.size());
  const auto& fft = *sys_->fft;
  const std::size_t plane = fft.spectrum_size();
  const std::size_t pix = std::size_t(sys_->height) * sys_->width;
  std::vector<std::complex<double>> spec(plane), tmp(plane);
  for (int c = 0; c < img_channels_; ++c) {
    fft.forward(x.plane_ptr(c), spec.data());
    double* block = coeffs.data() + std::size_t(c) * mask_size();
    for (int k = 0; k < sys_->channels; ++k) {
      const double* f = sys_->filters.data() + std::size_t(k) * plane;
      for (std::size_t p = 0; p < plane; ++p) tmp[p] = spec[p] * f[p];
      fft.inverse(tmp.data(), block + std::size_t(k) * pix);
    }
  }
}

void ShearletRep::synthesize(std::span<const double> coeffs, Image& out) const {
  check_coeffs(coeffs.size());
  const auto& fft = *sys_->fft;
  const std::size_t plane = fft.spectrum_size();
  const std::size_t pix = std::size_t(sys_->height) * sys_->width;
  out = Image(sys_->height, sys_->width, img_channels_);
  std::vector<std::complex<double>> acc(plane), spec(plane);
  for (int c = 0; c < img_channels_; ++c) {
    std::fill(acc.begin(), acc.end(), std::complex<double>(0.0, 0.0));
    const double* block = coeffs.data() + std::size_t(c) * mask_size();
    for (int k = 0; k < sys_->channels; ++k) {
      fft.forward(block + std::size_t(k) * pix, spec.data());
      const double* g = sys_->inv_filters.data() + std::size_t(k) * plane;
      for (std::size_t p = 0; p < plane; ++p) acc[p] += spec[p] * g[p];
    }
    fft.inverse(acc.data(), out.plane_ptr(c));
  }
}

void ShearletRep::synthesize_adjoint(const Image& y, std::span<double> coeffs) const {
  check_image(y);
  check_coeffs(coeffs.size());
  const auto& fft = *sys_->fft;
  const std::size_t plane = fft.spectrum_size();
  const std::size_t pix = std::size_t(sys_->height) * sys_->width;
  std::vector<std::complex<double>> spec(plane), tmp(plane);
  for (int c = 0; c < img_channels_; ++c) {
    fft.forward(y.plane_ptr(c), spec.data());
    double* block = coeffs.data() + std::size_t(c) * mask_size();
    for (int k = 0; k < sys_->channels; ++k) {
      const double* g = sys_->inv_filters.data() + std::size_t(k) * plane;
      for (std::size_t p = 0; p < plane; ++p) tmp[p] = spec[p] * g[p];
      fft.inverse(tmp.data(), block + std::size_t(k) * pix);
    }
  }
}

}  // namespace maskx
