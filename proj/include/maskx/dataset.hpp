#pragma once

#include <span>
#include <string>
#include <vector>

#include "maskx/image.hpp"
#include "maskx/rng.hpp"

namespace maskx {

inline constexpr int kDatasetImageSize = 128;
inline constexpr int kDatasetClasses = 3;
inline constexpr int kDatasetPatchSize = 36;

// Grayscale sample whose class is decided solely by the oriented pattern
// inside the patch box: horizontal stripes (0), vertical stripes (1), or a
// filled disk (2). Rectangles, line segments, and the background gradient are
// label-independent clutter placed away from the patch.
struct SyntheticSample {
  Image image;
  int label = 0;
  int patch_x = 0, patch_y = 0, patch_size = kDatasetPatchSize;
};

// Deterministic scene description; split out so tests can re-randomize the
// clutter while keeping the class pattern fixed.
struct SampleParams {
  struct Rect {
    int x, y, w, h;
    double val;
  };
  struct Seg {
    double x0, y0, x1, y1;
    double val;
    int thickness;
  };

  int label = 0;
  int patch_x = 0, patch_y = 0;
  int stripe_phase = 0;
  double bg_base = 0.2, bg_amp = 0.1, bg_theta = 0.0;
  std::vector<Rect> rects;
  std::vector<Seg> segs;
};

SampleParams sample_params(Rng& rng, int label);
void randomize_nuisance(SampleParams& params, Rng& rng);
Image render_sample(const SampleParams& params);

SyntheticSample generate_sample(std::uint64_t seed, int index);

// Balanced classes (label = index mod 3), byte-deterministic given the rng seed.
std::vector<SyntheticSample> generate_dataset(Rng& rng, int n);

// PNG files plus labels.csv (filename,label,patch_x,patch_y,patch_size).
void write_dataset(const std::string& dir, std::span<const SyntheticSample> samples);
std::vector<SyntheticSample> load_dataset(const std::string& dir);

}  // namespace maskx
