#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maskx/error.hpp"

namespace maskx {

// Planar raster: data laid out [channel][row][col]. Pixel values are nominally
// in [0,1]; intermediate arithmetic may leave that range, save_image clamps.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c), data(std::size_t(h) * w * c, fill) {
    require(h >= 8 && w >= 8 && (c == 1 || c == 3), Errc::invalid_argument,
            "bad image shape (dimensions must be at least 8x8, channels 1 or 3)");
  }

  std::size_t plane() const noexcept { return std::size_t(height) * width; }
  std::size_t size() const noexcept { return plane() * channels; }

  double* plane_ptr(int c) { return data.data() + std::size_t(c) * plane(); }
  const double* plane_ptr(int c) const { return data.data() + std::size_t(c) * plane(); }

  double& at(int c, int y, int x) { return data[(std::size_t(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(std::size_t(c) * height + y) * width + x]; }

  bool same_shape(const Image& o) const noexcept {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// PNG (8-bit gray/RGB) or binary PGM (P5). Values scaled to [0,1]; optional
// (height, width) bilinear resize applied after decoding.
Image load_image(const std::string& path, std::optional<std::pair<int, int>> target_size = {});

// 8-bit PNG, values clamped to [0,1] and quantized round-half-up.
void save_image(const Image& img, const std::string& path);

// Half-pixel-center sampling convention, clamped at borders.
Image resize_bilinear(const Image& img, int out_h, int out_w);

Image clamp01(const Image& img);

// Normalized Gaussian kernel, reflect padding, radius ceil(3*sigma).
Image gaussian_blur(const Image& img, double sigma);

inline std::uint8_t quantize_u8(double v) {
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  double q = v * 255.0 + 0.5;  // round half up
  int b = int(q);
  return std::uint8_t(b > 255 ? 255 : b);
}

}  // namespace maskx
