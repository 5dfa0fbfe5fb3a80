#include "maskx/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace maskx {

namespace {

constexpr int kN = kDatasetImageSize;
constexpr int kPatch = kDatasetPatchSize;
constexpr double kPatchLo = 0.05;
constexpr double kPatchHi = 0.95;
constexpr int kStripePeriod = 4;

bool intersects_patch(int x, int y, int w, int h, const SampleParams& p, int margin) {
  const int px0 = p.patch_x - margin, py0 = p.patch_y - margin;
  const int px1 = p.patch_x + kPatch + margin, py1 = p.patch_y + kPatch + margin;
  return x < px1 && x + w > px0 && y < py1 && y + h > py0;
}

}  // namespace

SampleParams sample_params(Rng& rng, int label) {
  SampleParams p;
  p.label = label;
  const int span = kN - kPatch - 8;
  p.patch_x = 4 + int(rng.next_below(std::uint64_t(span)));
  p.patch_y = 4 + int(rng.next_below(std::uint64_t(span)));
  p.stripe_phase = int(rng.next_below(kStripePeriod));
  p.bg_base = rng.uniform(0.10, 0.25);
  p.bg_amp = rng.uniform(0.05, 0.20);
  p.bg_theta = rng.uniform(0.0, 2.0 * M_PI);
  randomize_nuisance(p, rng);
  return p;
}

void randomize_nuisance(SampleParams& p, Rng& rng) {
  p.rects.clear();
  p.segs.clear();
  const int n_rects = 3 + int(rng.next_below(3));
  for (int i = 0; i < n_rects; ++i) {
    for (int attempt = 0; attempt < 60; ++attempt) {
      SampleParams::Rect r;
      r.w = 8 + int(rng.next_below(21));
      r.h = 8 + int(rng.next_below(21));
      r.x = int(rng.next_below(std::uint64_t(kN - r.w)));
      r.y = int(rng.next_below(std::uint64_t(kN - r.h)));
      r.val = rng.uniform(0.25, 0.90);
      if (!intersects_patch(r.x, r.y, r.w, r.h, p, 2)) {
        p.rects.push_back(r);
        break;
      }
    }
  }
  const int n_segs = 1 + int(rng.next_below(2));
  for (int i = 0; i < n_segs; ++i) {
    for (int attempt = 0; attempt < 60; ++attempt) {
      SampleParams::Seg s;
      s.x0 = rng.uniform(0.0, kN - 1.0);
      s.y0 = rng.uniform(0.0, kN - 1.0);
      s.x1 = rng.uniform(0.0, kN - 1.0);
      s.y1 = rng.uniform(0.0, kN - 1.0);
      s.val = rng.uniform(0.2, 1.0);
      s.thickness = 1 + int(rng.next_below(2));
      const int bx = int(std::floor(std::min(s.x0, s.x1))) - s.thickness;
      const int by = int(std::floor(std::min(s.y0, s.y1))) - s.thickness;
      const int bw = int(std::ceil(std::abs(s.x1 - s.x0))) + 2 * s.thickness + 1;
      const int bh = int(std::ceil(std::abs(s.y1 - s.y0))) + 2 * s.thickness + 1;
      if (!intersects_patch(bx, by, bw, bh, p, 2)) {
        p.segs.push_back(s);
        break;
      }
    }
  }
}

Image render_sample(const SampleParams& p) {
  Image img(kN, kN, 1);
  const double ct = std::cos(p.bg_theta), st = std::sin(p.bg_theta);
  for (int y = 0; y < kN; ++y)
    for (int x = 0; x < kN; ++x) {
      const double gx = (x / double(kN - 1) - 0.5) * 2.0;
      const double gy = (y / double(kN - 1) - 0.5) * 2.0;
      const double g = (ct * gx + st * gy) / std::sqrt(2.0);
      img.at(0, y, x) = p.bg_base + p.bg_amp * 0.5 * (g + 1.0);
    }

  for (const auto& r : p.rects)
    for (int y = r.y; y < r.y + r.h; ++y)
      for (int x = r.x; x < r.x + r.w; ++x) img.at(0, y, x) = r.val;

  for (const auto& s : p.segs) {
    const double len = std::max(1.0, std::hypot(s.x1 - s.x0, s.y1 - s.y0));
    const int steps = int(len * 2.0) + 1;
    const int t = s.thickness;
    for (int i = 0; i <= steps; ++i) {
      const double u = double(i) / steps;
      const int cx = int(std::lround(s.x0 + u * (s.x1 - s.x0)));
      const int cy = int(std::lround(s.y0 + u * (s.y1 - s.y0)));
      for (int dy = -(t - 1); dy <= t - 1; ++dy)
        for (int dx = -(t - 1); dx <= t - 1; ++dx) {
          const int px = cx + dx, py = cy + dy;
          if (px >= 0 && px < kN && py >= 0 && py < kN) img.at(0, py, px) = s.val;
        }
    }
  }

  // class pattern last, so the patch content is never occluded
  const double disk_r = std::sqrt(kPatch * kPatch / (2.0 * M_PI));  // ~half the patch area
  for (int y = 0; y < kPatch; ++y)
    for (int x = 0; x < kPatch; ++x) {
      double v = kPatchLo;
      switch (p.label) {
        case 0:
          v = (((y + p.stripe_phase) / (kStripePeriod / 2)) % 2 == 0) ? kPatchHi : kPatchLo;
          break;
        case 1:
          v = (((x + p.stripe_phase) / (kStripePeriod / 2)) % 2 == 0) ? kPatchHi : kPatchLo;
          break;
        case 2: {
          const double c = (kPatch - 1) / 2.0;
          const double d2 = (y - c) * (y - c) + (x - c) * (x - c);
          v = (d2 <= disk_r * disk_r) ? kPatchHi : kPatchLo;
          break;
        }
        default:
          fail(Errc::invalid_argument, "invalid class label");
      }
      img.at(0, p.patch_y + y, p.patch_x + x) = v;
    }
  return img;
}

SyntheticSample generate_sample(std::uint64_t seed, int index) {
  Rng sub(Rng::derive_seed(seed, std::uint64_t(index)));
  SyntheticSample s;
  s.label = index % kDatasetClasses;
  const SampleParams p = sample_params(sub, s.label);
  s.image = render_sample(p);
  s.patch_x = p.patch_x;
  s.patch_y = p.patch_y;
  s.patch_size = kPatch;
  return s;
}

std::vector<SyntheticSample> generate_dataset(Rng& rng, int n) {
  require(n >= 1, Errc::invalid_argument, "dataset size must be positive");
  std::vector<SyntheticSample> out;
  out.reserve(std::size_t(n));
  for (int i = 0; i < n; ++i) out.push_back(generate_sample(rng.seed(), i));
  return out;
}

void write_dataset(const std::string& dir, std::span<const SyntheticSample> samples) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream csv(fs::path(dir) / "labels.csv");
  require(csv.good(), Errc::io, "cannot write labels.csv in " + dir);
  csv << "filename,label,patch_x,patch_y,patch_size\n";
  char name[32];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(name, sizeof(name), "sample_%05zu.png", i);
    save_image(samples[i].image, (fs::path(dir) / name).string());
    csv << name << ',' << samples[i].label << ',' << samples[i].patch_x << ','
        << samples[i].patch_y << ',' << samples[i].patch_size << '\n';
  }
  require(csv.good(), Errc::io, "write failed for labels.csv in " + dir);
}

std::vector<SyntheticSample> load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream csv(fs::path(dir) / "labels.csv");
  require(csv.good(), Errc::io, "cannot open labels.csv in " + dir);
  std::string line;
  std::getline(csv, line);  // header
  std::vector<SyntheticSample> out;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string fname, field;
    SyntheticSample s;
    std::getline(ss, fname, ',');
    std::getline(ss, field, ',');
    s.label = std::stoi(field);
    std::getline(ss, field, ',');
    s.patch_x = std::stoi(field);
    std::getline(ss, field, ',');
    s.patch_y = std::stoi(field);
    std::getline(ss, field, ',');
    s.patch_size = std::stoi(field);
    require(s.label >= 0 && s.label < kDatasetClasses, Errc::format,
            "corrupt dataset: bad label in labels.csv");
    s.image = load_image((fs::path(dir) / fname).string());
    out.push_back(std::move(s));
  }
  require(!out.empty(), Errc::format, "corrupt dataset: labels.csv has no rows");
  return out;
}

}  // namespace maskx
