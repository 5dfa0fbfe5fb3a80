#include "maskx/edges.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace maskx {

std::size_t EdgeMap::count() const {
  return std::size_t(std::count(on.begin(), on.end(), std::uint8_t(1)));
}

EdgeMap detect_edges(const Image& img, double low, double high, double sigma) {
  require(0.0 < low && low <= high, Errc::invalid_argument,
          "edge thresholds must satisfy 0 < low <= high");
  require(sigma > 0.0, Errc::invalid_argument, "sigma must be positive");

  const int h = img.height, w = img.width;
  Image gray(h, w, 1);
  for (int c = 0; c < img.channels; ++c)
    for (std::size_t p = 0; p < gray.plane(); ++p)
      gray.data[p] += img.plane_ptr(c)[p] / img.channels;
  gray = gaussian_blur(gray, sigma);

  auto reflect = [](int i, int n) { return i < 0 ? -i - 1 : (i >= n ? 2 * n - 1 - i : i); };
  auto px = [&](int y, int x) { return gray.data[std::size_t(reflect(y, h)) * w + reflect(x, w)]; };

  std::vector<double> gx(gray.plane()), gy(gray.plane()), mag(gray.plane());
  double gmax = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double sx = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1));
      const double sy = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1));
      const std::size_t p = std::size_t(y) * w + x;
      gx[p] = sx;
      gy[p] = sy;
      mag[p] = std::hypot(sx, sy);
      gmax = std::max(gmax, mag[p]);
    }

  EdgeMap map;
  map.height = h;
  map.width = w;
  map.on.assign(gray.plane(), 0);
  if (gmax <= 0.0) return map;

  // Non-maximum suppression along the quantized gradient direction; the
  // strict > on one side keeps plateau ridges one pixel wide.
  auto mag_at = [&](int y, int x) -> double {
    if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
    return mag[std::size_t(y) * w + x];
  };
  std::vector<std::uint8_t> nms(gray.plane(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t p = std::size_t(y) * w + x;
      if (mag[p] == 0.0) continue;
      double angle = std::atan2(gy[p], gx[p]) * 180.0 / M_PI;
      if (angle < 0) angle += 180.0;
      double a, b;
      if (angle < 22.5 || angle >= 157.5) {
        a = mag_at(y, x - 1);
        b = mag_at(y, x + 1);
      } else if (angle < 67.5) {
        a = mag_at(y - 1, x + 1);
        b = mag_at(y + 1, x - 1);
      } else if (angle < 112.5) {
        a = mag_at(y - 1, x);
        b = mag_at(y + 1, x);
      } else {
        a = mag_at(y - 1, x - 1);
        b = mag_at(y + 1, x + 1);
      }
      if (mag[p] > a && mag[p] >= b) nms[p] = 1;
    }

  const double high_t = high * gmax;
  const double low_t = low * gmax;
  std::vector<std::size_t> stack;
  for (std::size_t p = 0; p < gray.plane(); ++p)
    if (nms[p] && mag[p] >= high_t) {
      map.on[p] = 1;
      stack.push_back(p);
    }
  while (!stack.empty()) {
    const std::size_t p = stack.back();
    stack.pop_back();
    const int y = int(p / std::size_t(w)), x = int(p % std::size_t(w));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int ny = y + dy, nx = x + dx;
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const std::size_t q = std::size_t(ny) * w + nx;
        if (!map.on[q] && nms[q] && mag[q] >= low_t) {
          map.on[q] = 1;
          stack.push_back(q);
        }
      }
  }
  return map;
}

double hallucination_score(const EdgeMap& expl_edges, const EdgeMap& img_edges, int tolerance) {
  require(expl_edges.height == img_edges.height && expl_edges.width == img_edges.width,
          Errc::shape_mismatch, "edge map shapes differ");
  require(tolerance >= 0, Errc::invalid_argument, "tolerance must be non-negative");
  const std::size_t n_img = img_edges.count();
  require(n_img > 0, Errc::degenerate, "hallucination score undefined: image has no edges");

  const int h = img_edges.height, w = img_edges.width;
  std::vector<std::uint8_t> covered(img_edges.on);
  if (tolerance > 0) {
    covered.assign(img_edges.on.size(), 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!img_edges.at(y, x)) continue;
        for (int dy = -tolerance; dy <= tolerance; ++dy)
          for (int dx = -tolerance; dx <= tolerance; ++dx) {
            const int ny = y + dy, nx = x + dx;
            if (ny >= 0 && ny < h && nx >= 0 && nx < w) covered[std::size_t(ny) * w + nx] = 1;
          }
      }
  }
  std::size_t artificial = 0;
  for (std::size_t p = 0; p < expl_edges.on.size(); ++p)
    if (expl_edges.on[p] && !covered[p]) ++artificial;
  return double(artificial) / double(n_img);
}

}  // namespace maskx
