#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "maskx/image.hpp"
#include "maskx/rng.hpp"

using namespace maskx;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto d = fs::temp_directory_path() / "maskx_core_tests";
  fs::create_directories(d);
  return d;
}

Image random_image(int h, int w, int c, std::uint64_t seed) {
  Image img(h, w, c);
  Rng rng(seed);
  for (double& v : img.data) v = rng.next_double();
  return img;
}

// Reference bilinear interpolation, written independently of the library path.
double bilinear_ref(const Image& img, int c, double sy, double sx) {
  sy = std::min(std::max(sy, 0.0), double(img.height - 1));
  sx = std::min(std::max(sx, 0.0), double(img.width - 1));
  const int y0 = int(sy), x0 = int(sx);
  const int y1 = std::min(y0 + 1, img.height - 1), x1 = std::min(x0 + 1, img.width - 1);
  const double fy = sy - y0, fx = sx - x0;
  return img.at(c, y0, x0) * (1 - fy) * (1 - fx) + img.at(c, y0, x1) * (1 - fy) * fx +
         img.at(c, y1, x0) * fy * (1 - fx) + img.at(c, y1, x1) * fy * fx;
}

}  // namespace

TEST_CASE("rng determinism and degenerate interval") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng r(7);
  std::vector<double> vals(100);
  r.fill_uniform(3.0, 3.0, vals);
  for (double v : vals) CHECK(v == 3.0);

  CHECK_THROWS_AS(r.uniform(2.0, 1.0), Error);
}

TEST_CASE("rng law of large numbers") {
  Rng r(123);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += r.uniform(0.0, 1.0);
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("rng range and fork independence") {
  Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = r.uniform(-2.0, 5.0);
    CHECK(v >= -2.0);
    CHECK(v < 5.0);
  }
  Rng f1 = r.fork(1), f2 = r.fork(2);
  CHECK(f1.next_u64() != f2.next_u64());
  // forks are stable regardless of parent state
  Rng r2(9);
  r2.next_u64();
  CHECK(r.fork(5).next_u64() == r2.fork(5).next_u64());
}

TEST_CASE("pgm load scales to unit range") {
  const auto dir = temp_dir();
  const auto path = (dir / "const.pgm").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# test\n8 8\n255\n";
    for (int i = 0; i < 64; ++i) out.put(char(0xFF));
  }
  Image img = load_image(path);
  CHECK(img.height == 8);
  CHECK(img.width == 8);
  CHECK(img.channels == 1);
  for (double v : img.data) CHECK(v == 1.0);

  const auto path0 = (dir / "zero.pgm").string();
  {
    std::ofstream out(path0, std::ios::binary);
    out << "P5\n8 8\n255\n";
    for (int i = 0; i < 64; ++i) out.put(char(0));
  }
  Image z = load_image(path0);
  for (double v : z.data) CHECK(v == 0.0);
}

TEST_CASE("pgm 16-bit rejected") {
  const auto path = (temp_dir() / "deep.pgm").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n8 8\n65535\n";
    for (int i = 0; i < 128; ++i) out.put(char(0));
  }
  CHECK_THROWS_AS(load_image(path), Error);
}

TEST_CASE("quantization rule round-half-up") {
  CHECK(quantize_u8(1.0) == 255);
  CHECK(quantize_u8(0.0) == 0);
  CHECK(quantize_u8(0.5) == 128);  // 127.5 rounds up
  CHECK(quantize_u8(1.7) == 255);
  CHECK(quantize_u8(-0.3) == 0);
}

TEST_CASE("png save/load round trip within quantization bound") {
  const auto dir = temp_dir();
  for (int ch : {1, 3}) {
    Image img = random_image(16, 24, ch, 99 + ch);
    const auto path = (dir / ("rt" + std::to_string(ch) + ".png")).string();
    save_image(img, path);
    Image back = load_image(path);
    REQUIRE(back.same_shape(img));
    double max_err = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i)
      max_err = std::max(max_err, std::abs(img.data[i] - back.data[i]));
    CHECK(max_err <= 1.0 / 255.0 + 1e-12);
  }
}

TEST_CASE("png rejects unsupported files") {
  const auto dir = temp_dir();
  const auto garbage = (dir / "garbage.png").string();
  {
    std::ofstream out(garbage, std::ios::binary);
    out << "\x89PNG not really";
  }
  CHECK_THROWS_AS(load_image(garbage), Error);
  CHECK_THROWS_AS(load_image((dir / "does_not_exist.png").string()), Error);
}

TEST_CASE("bilinear resize matches reference oracle") {
  Image img = random_image(512, 512, 3, 2024);
  Image small = resize_bilinear(img, 256, 256);
  REQUIRE(small.height == 256);
  REQUIRE(small.width == 256);
  REQUIRE(small.channels == 3);
  Rng pick(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = int(pick.next_below(3));
    const int y = int(pick.next_below(256));
    const int x = int(pick.next_below(256));
    const double sy = (y + 0.5) * 2.0 - 0.5;
    const double sx = (x + 0.5) * 2.0 - 0.5;
    CHECK(small.at(c, y, x) == doctest::Approx(bilinear_ref(img, c, sy, sx)).epsilon(1e-12));
  }
}

TEST_CASE("resize down-up perturbation stays within interpolation error") {
  // smooth image: down+up round trip error bounded (compared to a worst-case bound)
  Image img(64, 64, 1);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      img.at(0, y, x) = 0.5 + 0.4 * std::sin(2.0 * M_PI * y / 64.0) * std::cos(2.0 * M_PI * x / 64.0);
  Image round = resize_bilinear(resize_bilinear(img, 32, 32), 64, 64);
  double max_err = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i)
    max_err = std::max(max_err, std::abs(img.data[i] - round.data[i]));
  CHECK(max_err < 0.02);  // ~ h^2 * |f''| for this band-limited profile
}

TEST_CASE("load with target size resizes") {
  const auto dir = temp_dir();
  Image img = random_image(32, 32, 1, 77);
  const auto path = (dir / "resize_src.png").string();
  save_image(img, path);
  Image loaded = load_image(path, std::make_pair(16, 24));
  CHECK(loaded.height == 16);
  CHECK(loaded.width == 24);
  for (double v : loaded.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("gaussian blur preserves constants") {
  Image img(16, 16, 1, 0.37);
  Image blurred = gaussian_blur(img, 2.0);
  for (double v : blurred.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}
