#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "maskx/linear_rep.hpp"
#include "maskx/rng.hpp"
#include "maskx/shearlet.hpp"
#include "maskx/wavelet.hpp"

using namespace maskx;

namespace {

Image random_image(int h, int w, int c, std::uint64_t seed) {
  Image img(h, w, c);
  Rng rng(seed);
  for (double& v : img.data) v = rng.next_double();
  return img;
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  Rng rng(seed);
  rng.fill_uniform(lo, hi, v);
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Image gaussian_bump(int n, double sigma) {
  Image img(n, n, 1);
  const double c = (n - 1) / 2.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      img.at(0, y, x) = std::exp(-((y - c) * (y - c) + (x - c) * (x - c)) / (2 * sigma * sigma));
  return img;
}

}  // namespace

TEST_CASE("db3 filter identities") {
  WaveletBasis b = build_wavelet_basis("db3", 1);
  const double sum_h = std::accumulate(b.lowpass.begin(), b.lowpass.end(), 0.0);
  const double sum_g = std::accumulate(b.highpass.begin(), b.highpass.end(), 0.0);
  CHECK(std::abs(sum_h - std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(sum_g) < 1e-12);
  // orthonormality at even shifts
  for (const auto& f : {b.lowpass, b.highpass}) {
    for (int k = 1; 2 * k < int(f.size()); ++k) {
      double acc = 0.0;
      for (int t = 0; t + 2 * k < int(f.size()); ++t) acc += f[t] * f[t + 2 * k];
      CHECK(std::abs(acc) < 1e-12);
    }
  }
}

TEST_CASE("unknown family and bad levels rejected") {
  CHECK_THROWS_AS(build_wavelet_basis("sym9", 3), Error);
  CHECK_THROWS_AS(build_wavelet_basis("db3", 0), Error);
}

TEST_CASE("haar level-1 block on a 2x2 plane is critically sampled") {
  WaveletBasis haar = build_wavelet_basis("haar", 1);
  double plane[4] = {1.0, 2.0, 3.0, 4.0};
  dwt_analyze_plane(haar, 2, 2, plane);
  // 1 approx + 3 detail coefficients; approx of a 2x2 block is 2 * mean
  CHECK(plane[0] == doctest::Approx(2.0 * 2.5).epsilon(1e-12));
  const auto r = approx_rect(2, 2, 1);
  CHECK(r.h * r.w == 1);
  int detail_count = 0;
  for (int k = 0; k < 3; ++k) {
    const auto d = detail_rect(2, 2, 1, k);
    detail_count += d.h * d.w;
  }
  CHECK(detail_count == 3);
}

TEST_CASE("db3 5-level pyramid preserves coefficient count at 256x256") {
  WaveletBasis b = build_wavelet_basis("db3", 5);
  Image img = random_image(256, 256, 1, 11);
  WaveletPyramid pyr = dwt_analyze(b, img);
  CHECK(pyr.data.size() == 256u * 256u);
}

TEST_CASE("constant image has zero details and scaled approx") {
  WaveletBasis b = build_wavelet_basis("db3", 3);
  Image img(64, 64, 1, 0.7);
  WaveletPyramid pyr = dwt_analyze(b, img);
  const auto a = approx_rect(64, 64, 3);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const double v = pyr.plane_ptr(0)[y * 64 + x];
      if (y < a.h && x < a.w)
        CHECK(v == doctest::Approx(0.7 * 8.0).epsilon(1e-12));  // 2^J with J=3
      else
        CHECK(std::abs(v) < 1e-12);
    }
}

TEST_CASE("zero image gives zero pyramid and back") {
  WaveletBasis b = build_wavelet_basis("db2", 2);
  Image zero(32, 32, 1, 0.0);
  WaveletPyramid pyr = dwt_analyze(b, zero);
  for (double v : pyr.data) CHECK(v == 0.0);
  Image back = dwt_synthesize(b, pyr);
  for (double v : back.data) CHECK(v == 0.0);
}

TEST_CASE("dwt perfect reconstruction") {
  for (const char* family : {"haar", "db2", "db3", "db4"}) {
    WaveletBasis b = build_wavelet_basis(family, 4);
    Image img = random_image(64, 64, 1, 101);
    Image back = dwt_synthesize(b, dwt_analyze(b, img));
    CHECK(max_abs_diff(img.data, back.data) <= 1e-10);
  }
}

TEST_CASE("dwt analyze-synthesize identity on pyramids (orthonormality)") {
  WaveletBasis b = build_wavelet_basis("db3", 4);
  WaveletRep rep(b, 64, 64, 1);
  std::vector<double> coeffs = random_vec(rep.coeff_size(), 55);
  Image img = rep.synthesize(coeffs);
  std::vector<double> back = rep.analyze(img);
  CHECK(max_abs_diff(coeffs, back) <= 1e-10);
}

TEST_CASE("dwt adjoint identity") {
  WaveletBasis b = build_wavelet_basis("db3", 5);
  WaveletRep rep(b, 32, 64, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> c = random_vec(rep.coeff_size(), 1000 + trial);
    Image y = random_image(32, 64, 1, 2000 + trial);
    Image sc = rep.synthesize(c);
    std::vector<double> ay = rep.synthesize_adjoint(y);
    const double lhs = dot(sc.data, y.data);
    const double rhs = dot(c, ay);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * norm2(c) * norm2(y.data));
  }
}

TEST_CASE("dwt linearity") {
  WaveletBasis b = build_wavelet_basis("db2", 3);
  WaveletRep rep(b, 32, 32, 1);
  Image x = random_image(32, 32, 1, 3), y = random_image(32, 32, 1, 4);
  const double alpha = 1.7, beta = -0.4;
  Image mix(32, 32, 1);
  for (std::size_t i = 0; i < mix.size(); ++i) mix.data[i] = alpha * x.data[i] + beta * y.data[i];
  std::vector<double> cm = rep.analyze(mix), cx = rep.analyze(x), cy = rep.analyze(y);
  for (std::size_t i = 0; i < cm.size(); ++i)
    CHECK(std::abs(cm[i] - (alpha * cx[i] + beta * cy[i])) < 1e-12);
}

TEST_CASE("wavelet rep mismatched shapes rejected") {
  WaveletBasis b = build_wavelet_basis("db3", 3);
  WaveletRep rep(b, 64, 64, 1);
  Image wrong = random_image(32, 64, 1, 6);
  std::vector<double> buf(rep.coeff_size());
  CHECK_THROWS_AS(rep.analyze(wrong, buf), Error);
  CHECK_THROWS_AS(WaveletRep(b, 60, 64, 1), Error);  // 60 not divisible by 8
}

TEST_CASE("smooth bump: fine-scale wavelet details decay below coarse scale") {
  WaveletBasis b = build_wavelet_basis("db3", 4);
  Image img = gaussian_bump(128, 10.0);
  WaveletPyramid pyr = dwt_analyze(b, img);
  auto block_max = [&](int level) {
    double m = 0.0;
    for (int k = 0; k < 3; ++k) {
      const auto r = detail_rect(128, 128, level, k);
      for (int y = r.y0; y < r.y0 + r.h; ++y)
        for (int x = r.x0; x < r.x0 + r.w; ++x)
          m = std::max(m, std::abs(pyr.plane_ptr(0)[y * 128 + x]));
    }
    return m;
  };
  CHECK(block_max(1) < block_max(4));  // finest < coarsest
}

// ---------------------------------------------------------------------------

TEST_CASE("shearlet channel counts") {
  ShearletSystem sys = build_shearlet_system(256, 256, 4);
  CHECK(sys.channels == 49);
  CHECK(sys.info.size() == 49);

  // independent enumeration of the (scale, shearing, cone) index set
  int expected = 1;  // lowpass
  for (int j = 0; j < 2; ++j) {
    const int n = 1 << ((j + 2) / 2);
    expected += (2 * n + 1) + (2 * n - 1);
  }
  ShearletSystem small = build_shearlet_system(64, 64, 2);
  CHECK(small.channels == expected);
  CHECK(small.channels == 17);
  CHECK(shearlet_channel_count(2) == 17);
}

TEST_CASE("shearlet preconditions") {
  CHECK_THROWS_AS(build_shearlet_system(48, 64, 2), Error);
  CHECK_THROWS_AS(build_shearlet_system(16, 16, 1), Error);
  CHECK_THROWS_AS(build_shearlet_system(64, 64, 0), Error);
  CHECK_THROWS_AS(build_shearlet_system(64, 64, 7), Error);
}

TEST_CASE("dual weights cover the plane") {
  ShearletSystem sys = build_shearlet_system(64, 64, 3);
  CHECK(sys.min_dual_weight > 0.0);
  double mx = 0.0, mn = 1e300;
  for (double w : sys.dual_weights) {
    mx = std::max(mx, w);
    mn = std::min(mn, w);
  }
  // this construction is a tight frame by design
  CHECK(mn == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mx == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero image maps to zero stack and back") {
  ShearletRep rep(64, 64, 1, 2);
  Image zero(64, 64, 1, 0.0);
  std::vector<double> c = rep.analyze(zero);
  for (double v : c) CHECK(v == 0.0);
  Image back = rep.synthesize(c);
  for (double v : back.data) CHECK(v == 0.0);
}

TEST_CASE("constant image energy is confined to the lowpass channel") {
  ShearletRep rep(64, 64, 1, 3);
  Image img(64, 64, 1, 0.9);
  std::vector<double> c = rep.analyze(img);
  const std::size_t pix = 64 * 64;
  const double low_norm = norm2(std::span(c.data(), pix));
  CHECK(low_norm > 0.0);
  for (int k = 1; k < rep.system().channels; ++k) {
    const double hn = norm2(std::span(c.data() + k * pix, pix));
    CHECK(hn <= 1e-8 * low_norm);
  }
}

TEST_CASE("shearlet Parseval identity against a direct DFT oracle") {
  const int n = 32;
  ShearletSystem sys = build_shearlet_system(n, n, 1);
  ShearletRep rep(std::make_shared<ShearletSystem>(sys), 1);
  Image img = random_image(n, n, 1, 31);

  std::vector<double> c = rep.analyze(img);
  double lhs = 0.0;
  for (double v : c) lhs += v * v;

  // naive DFT magnitude spectrum
  std::vector<double> mag2(std::size_t(n) * n, 0.0);
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < n; ++kx) {
      std::complex<double> acc(0.0, 0.0);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const double ph = -2.0 * M_PI * (double(ky) * y / n + double(kx) * x / n);
          acc += img.at(0, y, x) * std::complex<double>(std::cos(ph), std::sin(ph));
        }
      mag2[std::size_t(ky) * n + kx] = std::norm(acc);
    }

  // fold the half-spectrum weights out to the full grid
  const int cols = n / 2 + 1;
  double rhs = 0.0;
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < n; ++kx) {
      const int mx = (kx <= n / 2) ? kx : n - kx;
      const int my = (kx <= n / 2) ? ky : (n - ky) % n;
      rhs += mag2[std::size_t(ky) * n + kx] * sys.dual_weights[std::size_t(my) * cols + mx];
    }
  rhs /= double(n) * n;

  CHECK(std::abs(lhs - rhs) <= 1e-8 * rhs);
}

TEST_CASE("shearlet round trip") {
  ShearletRep rep(128, 128, 1, 3);
  for (int trial = 0; trial < 3; ++trial) {
    Image img = random_image(128, 128, 1, 500 + trial);
    Image back = rep.synthesize(rep.analyze(img));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      num += (img.data[i] - back.data[i]) * (img.data[i] - back.data[i]);
      den += img.data[i] * img.data[i];
    }
    CHECK(std::sqrt(num / den) <= 1e-6);
  }
}

TEST_CASE("shearlet synthesis is linear") {
  ShearletRep rep(32, 32, 1, 1);
  std::vector<double> c1 = random_vec(rep.coeff_size(), 81);
  std::vector<double> c2 = random_vec(rep.coeff_size(), 82);
  std::vector<double> sum(c1.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = c1[i] + c2[i];
  Image s1 = rep.synthesize(c1), s2 = rep.synthesize(c2), ss = rep.synthesize(sum);
  for (std::size_t i = 0; i < ss.size(); ++i)
    CHECK(std::abs(ss.data[i] - (s1.data[i] + s2.data[i])) < 1e-12);
}

TEST_CASE("shearlet adjoint identity") {
  ShearletRep rep(32, 64, 1, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> c = random_vec(rep.coeff_size(), 7000 + trial);
    Image y = random_image(32, 64, 1, 8000 + trial);
    Image sc = rep.synthesize(c);
    std::vector<double> ay = rep.synthesize_adjoint(y);
    const double lhs = dot(sc.data, y.data);
    const double rhs = dot(c, ay);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * norm2(c) * norm2(y.data));
  }
  Image zero(32, 64, 1, 0.0);
  for (double v : rep.synthesize_adjoint(zero)) CHECK(v == 0.0);
}

TEST_CASE("gradient of |synth(c)|^2 equals 2 adj(synth(c))") {
  ShearletRep rep(32, 32, 1, 1);
  std::vector<double> c = random_vec(rep.coeff_size(), 99);
  Image sc = rep.synthesize(c);
  std::vector<double> grad = rep.synthesize_adjoint(sc);
  for (double& g : grad) g *= 2.0;

  auto energy = [&](const std::vector<double>& v) {
    Image s = rep.synthesize(v);
    return dot(s.data, s.data);
  };
  Rng pick(4);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t j = pick.next_below(c.size());
    std::vector<double> cp = c, cm = c;
    cp[j] += h;
    cm[j] -= h;
    const double fd = (energy(cp) - energy(cm)) / (2 * h);
    CHECK(std::abs(fd - grad[j]) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("smooth bump: fine shearlet channels decay below coarse channels") {
  ShearletRep rep(128, 128, 1, 3);
  Image img = gaussian_bump(128, 10.0);
  std::vector<double> c = rep.analyze(img);
  const std::size_t pix = 128 * 128;
  const auto& info = rep.system().info;
  double coarse = 0.0, fine = 0.0;
  for (int k = 1; k < rep.system().channels; ++k) {
    double m = 0.0;
    for (std::size_t p = 0; p < pix; ++p) m = std::max(m, std::abs(c[k * pix + p]));
    if (info[k].scale == 0) coarse = std::max(coarse, m);
    if (info[k].scale == rep.system().scales - 1) fine = std::max(fine, m);
  }
  CHECK(fine < coarse);
}

TEST_CASE("masking monotonicity is exact") {
  ShearletRep rep(32, 32, 1, 1);
  std::vector<double> c = random_vec(rep.coeff_size(), 17);
  std::vector<double> m = random_vec(rep.mask_size(), 18, 0.0, 1.0);
  for (std::size_t j = 0; j < rep.mask_size(); ++j)
    CHECK(std::abs(m[j] * c[j]) <= std::abs(c[j]));
}

TEST_CASE("coefficient dump format") {
  ShearletRep rep(32, 32, 1, 1);
  Image img = random_image(32, 32, 1, 3);
  std::vector<double> c = rep.analyze(img);
  const auto path = (std::filesystem::temp_directory_path() / "maskx_dump.bin").string();
  dump_coeffs(rep, c, path);

  std::ifstream in(path, std::ios::binary);
  std::uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  CHECK(header[0] == 0x3143584Du);  // "MXC1"
  CHECK(header[1] == std::uint32_t(rep.system().channels));
  CHECK(header[2] == 32);
  CHECK(header[3] == 32);
  std::vector<double> back(c.size());
  in.read(reinterpret_cast<char*>(back.data()), std::streamsize(back.size() * sizeof(double)));
  CHECK(in.good());
  CHECK(max_abs_diff(c, back) == 0.0);
}
