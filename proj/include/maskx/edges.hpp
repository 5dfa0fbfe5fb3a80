#pragma once

#include <cstdint>
#include <vector>

#include "maskx/image.hpp"

namespace maskx {

struct EdgeMap {
  int height = 0, width = 0;
  std::vector<std::uint8_t> on;  // 1 = edge pixel

  bool at(int y, int x) const { return on[std::size_t(y) * width + x] != 0; }
  std::size_t count() const;
};

// Canny-style detector: Gaussian blur, Sobel gradients, non-maximum
// suppression, hysteresis with thresholds relative to the maximum gradient
// magnitude. Multi-channel images are averaged to one intensity plane.
// Deterministic; a constant image yields an empty map.
EdgeMap detect_edges(const Image& img, double low = 0.1, double high = 0.2, double sigma = 1.4);

// Fraction of explanation edge pixels with no original edge pixel within
// Chebyshev distance `tolerance`, normalized by the original edge count.
// Raises Errc::degenerate when the original edge map is empty.
double hallucination_score(const EdgeMap& expl_edges, const EdgeMap& img_edges, int tolerance = 1);

}  // namespace maskx
