#include "maskx/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace maskx {

namespace {

std::vector<double> scaling_filter(const std::string& family) {
  if (family == "haar" || family == "db1") {
    const double c = 1.0 / std::sqrt(2.0);
    return {c, c};
  }
  if (family == "db2") {
    const double s3 = std::sqrt(3.0);
    const double d = 4.0 * std::sqrt(2.0);
    return {(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d};
  }
  if (family == "db3") {
    const double s10 = std::sqrt(10.0);
    const double b = std::sqrt(5.0 + 2.0 * s10);
    const double d = 16.0 * std::sqrt(2.0);
    return {(1 + s10 + b) / d,       (5 + s10 + 3 * b) / d,  (10 - 2 * s10 + 2 * b) / d,
            (10 - 2 * s10 - 2 * b) / d, (5 + s10 - 3 * b) / d, (1 + s10 - b) / d};
  }
  if (family == "db4") {
    return {0.23037781330885523,  0.71484657055254153,  0.63088076792959036,
            -0.02798376941698385, -0.18703481171888114, 0.03084138183598697,
            0.03288301166698295,  -0.01059740178499728};
  }
  fail(Errc::invalid_argument, "unknown wavelet family: " + family);
}

void analyze_1d(const double* x, int n, const std::vector<double>& h,
                const std::vector<double>& g, double* out) {
  const int half = n / 2;
  const int taps = int(h.size());
  for (int k = 0; k < half; ++k) {
    double lo = 0.0, hi = 0.0;
    for (int t = 0; t < taps; ++t) {
      const double v = x[(2 * k + t) % n];
      lo += h[t] * v;
      hi += g[t] * v;
    }
    out[k] = lo;
    out[half + k] = hi;
  }
}

// Exact transpose of analyze_1d.
void synthesize_1d(const double* in, int n, const std::vector<double>& h,
                   const std::vector<double>& g, double* x) {
  const int half = n / 2;
  const int taps = int(h.size());
  std::memset(x, 0, std::size_t(n) * sizeof(double));
  for (int k = 0; k < half; ++k) {
    const double lo = in[k];
    const double hi = in[half + k];
    for (int t = 0; t < taps; ++t) x[(2 * k + t) % n] += h[t] * lo + g[t] * hi;
  }
}

void check_divisible(int height, int width, int levels) {
  const int d = 1 << levels;
  require(height % d == 0 && width % d == 0, Errc::shape_mismatch,
          "image dimensions must be divisible by 2^levels");
}

}  // namespace

WaveletBasis build_wavelet_basis(const std::string& family, int levels) {
  require(levels >= 1 && levels <= 16, Errc::invalid_argument, "invalid wavelet level count");
  WaveletBasis b;
  b.family = (family == "db1") ? "haar" : family;
  b.levels = levels;
  b.lowpass = scaling_filter(family);
  const int taps = int(b.lowpass.size());
  b.highpass.resize(taps);
  for (int t = 0; t < taps; ++t)
    b.highpass[t] = ((t % 2) ? -1.0 : 1.0) * b.lowpass[taps - 1 - t];
  return b;
}

SubbandRect approx_rect(int height, int width, int levels) {
  return {0, 0, height >> levels, width >> levels};
}

SubbandRect detail_rect(int height, int width, int level, int orientation) {
  const int h = height >> level, w = width >> level;
  switch (orientation) {
    case 0: return {0, w, h, w};   // vertical (x-highpass)
    case 1: return {h, 0, h, w};   // horizontal (y-highpass)
    case 2: return {h, w, h, w};   // diagonal
    default: fail(Errc::invalid_argument, "orientation must be 0, 1 or 2");
  }
}

void dwt_analyze_plane(const WaveletBasis& basis, int height, int width, double* plane) {
  std::vector<double> buf(static_cast<std::size_t>(std::max(height, width)));
  std::vector<double> col(static_cast<std::size_t>(height));
  int h = height, w = width;
  for (int level = 0; level < basis.levels; ++level) {
    for (int y = 0; y < h; ++y) {
      analyze_1d(plane + std::size_t(y) * width, w, basis.lowpass, basis.highpass, buf.data());
      std::memcpy(plane + std::size_t(y) * width, buf.data(), std::size_t(w) * sizeof(double));
    }
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) col[y] = plane[std::size_t(y) * width + x];
      analyze_1d(col.data(), h, basis.lowpass, basis.highpass, buf.data());
      for (int y = 0; y < h; ++y) plane[std::size_t(y) * width + x] = buf[y];
    }
    h /= 2;
    w /= 2;
  }
}

void dwt_synthesize_plane(const WaveletBasis& basis, int height, int width, double* plane) {
  std::vector<double> buf(static_cast<std::size_t>(std::max(height, width)));
  std::vector<double> col(static_cast<std::size_t>(height));
  for (int level = basis.levels - 1; level >= 0; --level) {
    const int h = height >> level, w = width >> level;
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) col[y] = plane[std::size_t(y) * width + x];
      synthesize_1d(col.data(), h, basis.lowpass, basis.highpass, buf.data());
      for (int y = 0; y < h; ++y) plane[std::size_t(y) * width + x] = buf[y];
    }
    for (int y = 0; y < h; ++y) {
      synthesize_1d(plane + std::size_t(y) * width, w, basis.lowpass, basis.highpass, buf.data());
      std::memcpy(plane + std::size_t(y) * width, buf.data(), std::size_t(w) * sizeof(double));
    }
  }
}

WaveletPyramid dwt_analyze(const WaveletBasis& basis, const Image& img) {
  check_divisible(img.height, img.width, basis.levels);
  WaveletPyramid pyr;
  pyr.height = img.height;
  pyr.width = img.width;
  pyr.channels = img.channels;
  pyr.levels = basis.levels;
  pyr.family = basis.family;
  pyr.data = img.data;
  for (int c = 0; c < img.channels; ++c)
    dwt_analyze_plane(basis, img.height, img.width, pyr.plane_ptr(c));
  return pyr;
}

Image dwt_synthesize(const WaveletBasis& basis, const WaveletPyramid& pyr) {
  require(pyr.levels == basis.levels && pyr.family == basis.family, Errc::shape_mismatch,
          "pyramid does not match basis");
  check_divisible(pyr.height, pyr.width, basis.levels);
  Image img(pyr.height, pyr.width, pyr.channels);
  img.data = pyr.data;
  for (int c = 0; c < img.channels; ++c)
    dwt_synthesize_plane(basis, img.height, img.width, img.plane_ptr(c));
  return img;
}

WaveletRep::WaveletRep(WaveletBasis basis, int height, int width, int channels)
    : basis_(std::move(basis)), height_(height), width_(width), channels_(channels) {
  require(height >= 8 && width >= 8, Errc::invalid_argument, "wavelet rep: image too small");
  check_divisible(height, width, basis_.levels);

  group_map_.assign(std::size_t(height) * width, 0);
  for (int level = 1; level <= basis_.levels; ++level) {
    const int group = basis_.levels - level + 1;  // 1 = coarsest detail scale
    for (int k = 0; k < 3; ++k) {
      const SubbandRect r = detail_rect(height, width, level, k);
      for (int y = r.y0; y < r.y0 + r.h; ++y)
        for (int x = r.x0; x < r.x0 + r.w; ++x)
          group_map_[std::size_t(y) * width + x] = group;
    }
  }
}

void WaveletRep::analyze(const Image& x, std::span<double> coeffs) const {
  check_image(x);
  check_coeffs(coeffs.size());
  std::memcpy(coeffs.data(), x.data.data(), coeffs.size() * sizeof(double));
  for (int c = 0; c < channels_; ++c)
    dwt_analyze_plane(basis_, height_, width_, coeffs.data() + std::size_t(c) * mask_size());
}

void WaveletRep::synthesize(std::span<const double> coeffs, Image& out) const {
  check_coeffs(coeffs.size());
  out = Image(height_, width_, channels_);
  std::memcpy(out.data.data(), coeffs.data(), coeffs.size() * sizeof(double));
  for (int c = 0; c < channels_; ++c) dwt_synthesize_plane(basis_, height_, width_, out.plane_ptr(c));
}

void WaveletRep::synthesize_adjoint(const Image& y, std::span<double> coeffs) const {
  // Orthonormal basis: the adjoint of synthesis is analysis.
  analyze(y, coeffs);
}

Image WaveletRep::mask_heatmap(std::span<const double> mask) const {
  require(mask.size() == mask_size(), Errc::shape_mismatch, "mask size mismatch");
  Image out(height_, width_, 1);
  auto paint = [&](const SubbandRect& r, int level) {
    const int scale = 1 << level;
    for (int y = r.y0; y < r.y0 + r.h; ++y)
      for (int x = r.x0; x < r.x0 + r.w; ++x) {
        const double v = mask[std::size_t(y) * width_ + x];
        const int iy0 = (y - r.y0) * scale, ix0 = (x - r.x0) * scale;
        for (int iy = iy0; iy < std::min(iy0 + scale, height_); ++iy)
          for (int ix = ix0; ix < std::min(ix0 + scale, width_); ++ix)
            out.at(0, iy, ix) = std::max(out.at(0, iy, ix), v);
      }
  };
  paint(approx_rect(height_, width_, basis_.levels), basis_.levels);
  for (int level = 1; level <= basis_.levels; ++level)
    for (int k = 0; k < 3; ++k) paint(detail_rect(height_, width_, level, k), level);
  return out;
}

int default_wavelet_levels(int height, int width) {
  int v2 = 0;
  while (v2 < 5 && height % (1 << (v2 + 1)) == 0 && width % (1 << (v2 + 1)) == 0) ++v2;
  require(v2 >= 1, Errc::shape_mismatch, "image dimensions must be even for wavelet methods");
  return v2;
}

}  // namespace maskx
