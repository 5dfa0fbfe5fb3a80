#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "maskx/curves.hpp"
#include "maskx/metrics.hpp"

using namespace maskx;

namespace {

TinyConvNet make_net(int n, std::uint64_t seed) {
  TinyConvNet net(n, n, 1, 4, 8, 3);
  Rng rng(seed);
  net.init_weights(rng);
  return net;
}

Image random_image(int h, int w, int c, std::uint64_t seed) {
  Image img(h, w, c);
  Rng rng(seed);
  for (double& v : img.data) v = rng.next_double();
  return img;
}

// Independent brute-force extent: exp of the Shannon entropy of the
// normalized squared magnitudes.
double extent_oracle(std::span<const double> v) {
  double total = 0.0;
  for (double e : v) total += e * e;
  double h = 0.0;
  for (double e : v) {
    const double p = e * e / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::exp(h);
}

}  // namespace

TEST_CASE("cp entropy: all-ones mask gives 1") {
  std::vector<double> c = {0.3, -1.2, 4.0, 0.0, 2.2};
  std::vector<double> m(c.size(), 1.0);
  CHECK(cp_entropy_retained_info(c, m, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cp entropy: two-point uniform analytic value") {
  std::vector<double> c = {2.0, 2.0, 0.0, 0.0};
  std::vector<double> m = {1.0, 0.0, 0.0, 0.0};
  CHECK(cp_entropy_retained_info(c, m, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cp entropy: equal-magnitude k-of-N mask gives k/N") {
  const int N = 64, k = 13;
  Rng rng(5);
  std::vector<double> c(N), m(N, 0.0);
  for (double& v : c) v = (rng.next_double() < 0.5 ? -1.0 : 1.0) * 0.7;
  for (int i = 0; i < k; ++i) m[std::size_t(rng.next_below(N))] = 1.0;
  int kept = 0;
  for (double v : m) kept += (v == 1.0) ? 1 : 0;
  CHECK(cp_entropy_retained_info(c, m, 1) ==
        doctest::Approx(double(kept) / N).epsilon(1e-12));
}

TEST_CASE("cp entropy matches a brute-force oracle on random data") {
  Rng rng(6);
  std::vector<double> c(100), m(100);
  rng.fill_uniform(-2.0, 2.0, c);
  rng.fill_uniform(0.0, 1.0, m);
  std::vector<double> mc(100);
  for (int i = 0; i < 100; ++i) mc[i] = m[i] * c[i];
  const double expected = extent_oracle(mc) / extent_oracle(c);
  CHECK(cp_entropy_retained_info(c, m, 1) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("cp entropy is scale invariant") {
  Rng rng(7);
  std::vector<double> c(50), m(50);
  rng.fill_uniform(-1.0, 1.0, c);
  rng.fill_uniform(0.0, 1.0, m);
  const double base = cp_entropy_retained_info(c, m, 1);
  std::vector<double> scaled(c);
  for (double& v : scaled) v *= -17.25;
  CHECK(cp_entropy_retained_info(scaled, m, 1) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("cp entropy degenerate cases") {
  std::vector<double> c = {1.0, 2.0};
  std::vector<double> zero_mask = {0.0, 0.0};
  CHECK_THROWS_AS(cp_entropy_retained_info(c, zero_mask, 1), Error);
  std::vector<double> zeros = {0.0, 0.0};
  std::vector<double> ones = {1.0, 1.0};
  CHECK_THROWS_AS(cp_entropy_retained_info(zeros, ones, 1), Error);
}

TEST_CASE("cp l1 examples and bound") {
  std::vector<double> c = {3.0, 1.0};
  std::vector<double> m = {1.0, 0.0};
  CHECK(cp_l1_retained_info(c, m, 1) == doctest::Approx(0.75).epsilon(1e-12));
  std::vector<double> ones = {1.0, 1.0};
  CHECK(cp_l1_retained_info(c, ones, 1) == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> cc(20), mm(20);
    rng.fill_uniform(-3.0, 3.0, cc);
    rng.fill_uniform(0.0, 1.0, mm);
    const double v = cp_l1_retained_info(cc, mm, 1);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-15);
  }
}

TEST_CASE("cp l1 pixel examples") {
  Image x = random_image(8, 8, 1, 9);
  CHECK(cp_l1_pixel_retained_info(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  Image zero(8, 8, 1, 0.0);
  CHECK(cp_l1_pixel_retained_info(x, zero) == 0.0);
  Image half = x;
  for (double& v : half.data) v *= 0.5;
  CHECK(cp_l1_pixel_retained_info(x, half) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cp score arithmetic") {
  CHECK(cp_score(1.0, 1.0) == 1.0);
  CHECK(cp_score(0.9, 0.1) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK_THROWS_AS(cp_score(0.5, 0.0), Error);
}

TEST_CASE("constant image has no edges") {
  Image img(32, 32, 1, 0.6);
  EdgeMap map = detect_edges(img);
  CHECK(map.count() == 0);
}

TEST_CASE("vertical step produces a single one-pixel line") {
  const int n = 32;
  Image img(n, n, 1, 0.0);
  for (int y = 0; y < n; ++y)
    for (int x = n / 2; x < n; ++x) img.at(0, y, x) = 1.0;

  // hand-traced 1-D oracle: blur the step profile, take a [-1,0,1] derivative,
  // and find the column the one-sided tie-break keeps
  std::vector<double> profile(n, 0.0);
  for (int x = n / 2; x < n; ++x) profile[x] = 1.0;
  Image prof_img(8, n, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < n; ++x) prof_img.at(0, y, x) = profile[x];
  Image blurred = gaussian_blur(prof_img, 1.4);
  std::vector<double> deriv(n, 0.0);
  for (int x = 0; x < n; ++x) {
    const int xl = std::max(0, x - 1), xr = std::min(n - 1, x + 1);
    deriv[x] = std::abs(blurred.at(0, 4, xr) - blurred.at(0, 4, xl));
  }
  int expected_col = -1;
  for (int x = 1; x < n - 1; ++x)
    if (deriv[x] > deriv[x - 1] && deriv[x] >= deriv[x + 1]) {
      expected_col = x;
      break;
    }
  REQUIRE(expected_col >= 0);
  CHECK(std::abs(expected_col - n / 2) <= 1);

  EdgeMap map = detect_edges(img);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      CHECK(map.at(y, x) == (x == expected_col));
}

TEST_CASE("edge detector is deterministic and shift invariant in intensity") {
  Image img = random_image(32, 32, 1, 10);
  EdgeMap a = detect_edges(img);
  EdgeMap b = detect_edges(img);
  CHECK(a.on == b.on);

  Image shifted = img;
  for (double& v : shifted.data) v += 0.2;
  EdgeMap c = detect_edges(shifted);
  CHECK(a.on == c.on);
}

TEST_CASE("edge detector rejects bad parameters") {
  Image img(16, 16, 1, 0.0);
  CHECK_THROWS_AS(detect_edges(img, 0.3, 0.1), Error);
  CHECK_THROWS_AS(detect_edges(img, 0.0, 0.1), Error);
  CHECK_THROWS_AS(detect_edges(img, 0.1, 0.2, 0.0), Error);
}

TEST_CASE("hallucination score direct counts") {
  EdgeMap img_edges{16, 16, std::vector<std::uint8_t>(256, 0)};
  EdgeMap expl_edges{16, 16, std::vector<std::uint8_t>(256, 0)};
  // 20 image edge pixels in the top rows
  for (int i = 0; i < 20; ++i) img_edges.on[std::size_t(i)] = 1;
  // 10 explanation pixels far away (rows 8+)
  for (int i = 0; i < 10; ++i) expl_edges.on[std::size_t(8 * 16 + i)] = 1;
  CHECK(hallucination_score(expl_edges, img_edges, 1) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(hallucination_score(img_edges, img_edges, 1) == 0.0);
  CHECK(hallucination_score(img_edges, img_edges, 0) == 0.0);

  EdgeMap empty{16, 16, std::vector<std::uint8_t>(256, 0)};
  CHECK_THROWS_AS(hallucination_score(expl_edges, empty, 1), Error);
}

TEST_CASE("hallucination tolerance widens the match") {
  EdgeMap img_edges{8, 8, std::vector<std::uint8_t>(64, 0)};
  EdgeMap expl_edges{8, 8, std::vector<std::uint8_t>(64, 0)};
  img_edges.on[std::size_t(3 * 8 + 3)] = 1;
  expl_edges.on[std::size_t(3 * 8 + 4)] = 1;  // 1 pixel off
  CHECK(hallucination_score(expl_edges, img_edges, 1) == 0.0);
  CHECK(hallucination_score(expl_edges, img_edges, 0) == doctest::Approx(1.0));
}

TEST_CASE("retained probability basics") {
  TinyConvNet net = make_net(32, 11);
  Image x = random_image(32, 32, 1, 12);
  const int cls = net.argmax(x);
  CHECK(retained_probability(net, x, x, cls) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("curve endpoints and grid contract") {
  const int n = 32;
  TinyConvNet net = make_net(n, 13);
  Image x = random_image(n, n, 1, 14);
  ExplainerConfig cfg = default_config(Method::waveletx);
  cfg.steps = 4;
  cfg.mc_samples = 2;
  ExplanationResult res = explain(net, x, cfg);

  for (CurveMode mode : {CurveMode::representation, CurveMode::pixel}) {
    Curve ins = insertion_curve(net, res, 10, mode);
    Curve del = deletion_curve(net, res, 10, mode);
    REQUIRE(ins.fractions.size() == 11);
    REQUIRE(del.fractions.size() == 11);
    CHECK(ins.fractions.front() == 0.0);
    CHECK(ins.fractions.back() == 1.0);
    for (std::size_t i = 1; i < ins.fractions.size(); ++i)
      CHECK(ins.fractions[i] > ins.fractions[i - 1]);
    CHECK(ins.values.back() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(del.values.front() == doctest::Approx(1.0).epsilon(1e-6));
  }

  // fully-deleted state equals the zero-insertion state in representation mode
  Curve ins = insertion_curve(net, res, 5, CurveMode::representation);
  Curve del = deletion_curve(net, res, 5, CurveMode::representation);
  CHECK(del.values.back() == doctest::Approx(ins.values.front()).epsilon(1e-12));

  // p = 0 equals the zero-coefficient image probability, recomputed directly
  Image zero_img = res.rep->synthesize(std::vector<double>(res.rep->coeff_size(), 0.0));
  const double expected =
      net.predict(zero_img)[res.target_class] / net.predict(x)[res.target_class];
  CHECK(ins.values.front() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("all-equal masks use the flat-index tie break deterministically") {
  const int n = 32;
  TinyConvNet net = make_net(n, 15);
  Image x = random_image(n, n, 1, 16);
  PixelRep rep(n, n, 1);
  std::vector<double> mask(rep.mask_size(), 0.5);
  Curve a = deletion_curve(net, rep, x, mask, 0, 7, CurveMode::representation);
  Curve b = deletion_curve(net, rep, x, mask, 0, 7, CurveMode::representation);
  CHECK(a.values == b.values);
}

TEST_CASE("metrics report is complete and serializable") {
  const int n = 32;
  TinyConvNet net = make_net(n, 17);
  Image x = random_image(n, n, 1, 18);
  ExplainerConfig cfg = default_config(Method::shearletx);
  cfg.steps = 3;
  cfg.mc_samples = 2;
  ExplanationResult res = explain(net, x, cfg);
  MetricsReport report = evaluate_explanation(net, res);

  CHECK(report.method == "shearletx");
  CHECK(report.all_finite());
  CHECK(!report.degenerate);
  CHECK(report.retained_probability == doctest::Approx(res.retained_probability));

  const auto j = nlohmann::json::parse(metrics_report_json(report));
  for (const char* key :
       {"schema_version", "method", "retained_probability", "cp_entropy", "cp_l1", "cp_l1_pixel",
        "hallucination_score", "retained_probability_definition", "config", "degenerate"})
    CHECK(j.contains(key));
  CHECK(j["retained_probability_definition"] == "perturbation_free");
}

TEST_CASE("all-ones mask yields CP equal to retained probability") {
  const int n = 32;
  TinyConvNet net = make_net(n, 19);
  Image x = random_image(n, n, 1, 20);
  ExplainerConfig cfg = default_config(Method::waveletx);
  cfg.steps = 0;
  ExplanationResult res = explain(net, x, cfg);
  MetricsReport report = evaluate_explanation(net, res);
  CHECK(report.retained_info_l1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.cp_l1 == doctest::Approx(report.retained_probability).epsilon(1e-6));
  CHECK(report.cp_l1 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mask heatmaps have image shape") {
  const int n = 32;
  TinyConvNet net = make_net(n, 21);
  Image x = random_image(n, n, 1, 22);
  for (Method m : {Method::shearletx, Method::waveletx, Method::pixel}) {
    ExplainerConfig cfg = default_config(m);
    cfg.steps = 2;
    cfg.mc_samples = 2;
    ExplanationResult res = explain(net, x, cfg);
    Image heat = res.rep->mask_heatmap(res.mask);
    CHECK(heat.height == n);
    CHECK(heat.width == n);
    CHECK(heat.channels == 1);
    for (double v : heat.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}
