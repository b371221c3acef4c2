#include <catch_amalgamated.hpp>

#include <numeric>

#include "leafscan/features.hpp"
#include "leafscan/random.hpp"
#include "oracles.hpp"

using namespace leafscan;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GrayImage gray_image(std::size_t w, std::size_t h, std::vector<int> levels) {
  return GrayImage(w, h, std::move(levels));
}

LabImage lab_from_lightness(std::size_t w, std::size_t h, const std::vector<double>& l) {
  LabImage img(w, h);
  for (std::size_t i = 0; i < l.size(); ++i) img.pixels()[i] = Lab{l[i], 0.0, 0.0};
  return img;
}

void check_close(double actual, double expected, double tol) {
  CHECK_THAT(actual, WithinAbs(expected, tol) || WithinRel(expected, tol));
}

}  // namespace

TEST_CASE("quantization boundaries") {
  const LabImage lab = lab_from_lightness(3, 1, {100.0, 0.0, 50.0});
  const Mask all(3, 1, 1);
  const QuantizedLesion q = quantize_gray(lab, all, 8);
  CHECK(q.gray(0, 0) == 7);
  CHECK(q.gray(0, 1) == 0);
  CHECK(q.gray(0, 2) == 4);
  CHECK(q.intensities == std::vector<double>{1.0, 0.0, 0.5});

  Mask one(3, 1, 0);
  one(0, 1) = 1;
  CHECK_THROWS_AS(quantize_gray(lab, one, 8), DegenerateLesion);
  CHECK_THROWS_WITH(quantize_gray(lab, one, 8), "degenerate lesion");
  CHECK_THROWS_AS(quantize_gray(lab, all, 1), InputError);
}

TEST_CASE("hand-enumerated co-occurrence matrices") {
  SECTION("2x2 rows of equal levels") {
    const Glcm g = compute_glcm(gray_image(2, 2, {0, 0, 1, 1}), 2);
    CHECK(g(0, 0) == 0.5);
    CHECK(g(0, 1) == 0.0);
    CHECK(g(1, 0) == 0.0);
    CHECK(g(1, 1) == 0.5);
  }
  SECTION("checkerboard") {
    const Glcm g = compute_glcm(gray_image(4, 4, {0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0}), 2);
    CHECK(g(0, 1) == 0.5);
    CHECK(g(1, 0) == 0.5);
    CHECK(g(0, 0) == 0.0);
    const GlcmStats s = glcm_features(g);
    CHECK(s.contrast == 1.0);
    CHECK(s.correlation == -1.0);
  }
  SECTION("constant image") {
    const Glcm g = compute_glcm(gray_image(3, 3, std::vector<int>(9, 5)), 8);
    CHECK(g(5, 5) == 1.0);
    const GlcmStats s = glcm_features(g);
    CHECK(s.contrast == 0.0);
    CHECK(s.energy == 1.0);
    CHECK(s.homogeneity == 1.0);
    CHECK(s.idm == 1.0);
    CHECK(s.entropy == 0.0);
    CHECK(s.correlation == 0.0);
  }
  SECTION("absent pixels break pairs") {
    CHECK_THROWS_WITH(compute_glcm(gray_image(3, 2, {0, kAbsentLevel, 1, kAbsentLevel, 2, kAbsentLevel}), 4),
                      "no co-occurrence pairs");
  }
}

TEST_CASE("uniform 2x2 matrix") {
  const Glcm g{2, {0.25, 0.25, 0.25, 0.25}};
  const GlcmStats s = glcm_features(g);
  CHECK_THAT(s.entropy, WithinAbs(std::log(4.0), 1e-15));
  CHECK(s.energy == 0.25);
}

TEST_CASE("texture descriptors match a term-by-term summation on random matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 8;
    Glcm g{n, std::vector<double>(64, 0.0)};
    std::map<std::pair<int, int>, double> q;
    double total = 0;
    for (int x = 0; x < n; ++x) {
      for (int y = x; y < n; ++y) {
        const double v = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
        g.q[static_cast<std::size_t>(x * n + y)] = v;
        g.q[static_cast<std::size_t>(y * n + x)] = v;
        total += x == y ? v : 2 * v;
      }
    }
    for (double& v : g.q) v /= total;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if (g(x, y) > 0) q[{x, y}] = g(x, y);
    const GlcmStats s = glcm_features(g);
    const oracle::Texture t = oracle::texture(q);
    check_close(s.contrast, t.contrast, 1e-12);
    check_close(s.correlation, t.correlation, 1e-12);
    check_close(s.energy, t.energy, 1e-12);
    check_close(s.homogeneity, t.homogeneity, 1e-12);
    check_close(s.idm, t.idm, 1e-12);
    check_close(s.entropy, t.entropy, 1e-12);
  }
}

TEST_CASE("pixel statistics closed forms") {
  const PixelStats c = pixel_statistics(std::vector<double>{0.5, 0.5, 0.5});
  CHECK(c.mean == 0.5);
  CHECK(c.stddev == 0.0);
  CHECK(c.variance == 0.0);
  CHECK(c.skewness == 0.0);
  CHECK(c.kurtosis == 0.0);
  CHECK(c.smoothness == 0.0);
  CHECK(c.rms == 0.5);

  const PixelStats two = pixel_statistics(std::vector<double>{0.0, 1.0});
  CHECK_THAT(two.mean, WithinAbs(0.5, 1e-15));
  CHECK_THAT(two.stddev, WithinAbs(0.5, 1e-15));
  CHECK_THAT(two.variance, WithinAbs(0.25, 1e-15));
  CHECK_THAT(two.skewness, WithinAbs(0.0, 1e-15));
  CHECK_THAT(two.kurtosis, WithinAbs(-2.0, 1e-15));
  CHECK_THAT(two.smoothness, WithinAbs(0.2, 1e-15));
  CHECK_THAT(two.rms, WithinAbs(std::sqrt(0.5), 1e-15));

  CHECK_THROWS_AS(pixel_statistics(std::vector<double>{0.3}), DegenerateLesion);
}

TEST_CASE("pixel statistics agree with a two-pass oracle and ignore order") {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(2 + rng.index(200));
    for (double& x : v) x = rng.uniform();
    const PixelStats s = pixel_statistics(v);
    const oracle::Moments m = oracle::moments(v);
    check_close(s.mean, m.mean, 1e-12);
    check_close(s.stddev, m.stddev, 1e-12);
    check_close(s.variance, m.variance, 1e-12);
    check_close(s.skewness, m.skewness, 1e-12);
    check_close(s.kurtosis, m.kurtosis, 1e-12);
    check_close(s.smoothness, m.smoothness, 1e-12);
    check_close(s.rms, m.rms, 1e-12);
    CHECK_THAT(s.variance, WithinAbs(s.stddev * s.stddev, 1e-12));
    CHECK_THAT(s.smoothness, WithinAbs(1.0 - 1.0 / (1.0 + s.stddev * s.stddev), 1e-12));

    rng.shuffle(std::span<double>(v));
    const PixelStats p = pixel_statistics(v);
    CHECK(p.mean == s.mean);
    CHECK(p.kurtosis == s.kurtosis);
    CHECK(p.skewness == s.skewness);
    CHECK(p.rms == s.rms);
  }
}

TEST_CASE("normal samples have vanishing skewness and excess kurtosis") {
  Rng rng(2024);
  std::vector<double> v(100000);
  for (double& x : v) x = rng.normal(0.5, 0.1);
  const PixelStats s = pixel_statistics(v);
  CHECK(std::abs(s.skewness) < 0.1);
  CHECK(std::abs(s.kurtosis) < 0.1);
}

TEST_CASE("extracted features match the independent oracle") {
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    const oracle::Lesion les = oracle::random_lesion(seed);
    const FeatureVector f = extract_features(les.lab, les.mask);
    const auto expected = oracle::features(les.lab, les.mask, kDefaultGrayLevels);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      INFO("seed " << seed << " feature " << feature_names()[j]);
      check_close(f[j], expected[j], 1e-10);
    }
  }
}

TEST_CASE("constant-intensity lesion") {
  const double c = 0.42;
  const LabImage lab = lab_from_lightness(4, 3, std::vector<double>(12, 100 * c));
  const FeatureVector f = extract_features(lab, Mask(4, 3, 1));
  const double expected[kFeatureCount] = {0, 0, 1, 1, f[Feature::Mean], 0, 0, 0, 0, 0, 1, f[Feature::Mean], 0};
  CHECK_THAT(f[Feature::Mean], WithinAbs(c, 1e-15));
  CHECK(f[Feature::Rms] == f[Feature::Mean]);
  for (std::size_t j = 0; j < kFeatureCount; ++j) CHECK(f[j] == expected[j]);
}

TEST_CASE("glcm invariants on random lesions") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const oracle::Lesion les = oracle::random_lesion(seed);
    const QuantizedLesion q = quantize_gray(les.lab, les.mask, 8);
    const Glcm g = compute_glcm(q.gray, 8);
    double total = 0;
    bool diagonal_only = true;
    for (int x = 0; x < 8; ++x) {
      for (int y = 0; y < 8; ++y) {
        CHECK(g(x, y) == g(y, x));
        total += g(x, y);
        if (x != y && g(x, y) > 0) diagonal_only = false;
      }
    }
    CHECK_THAT(total, WithinAbs(1.0, 1e-12));
    const GlcmStats s = glcm_features(g);
    CHECK((s.contrast == 0.0) == diagonal_only);
    CHECK(s.entropy <= 2 * std::log(8.0) + 1e-12);
    CHECK(s.energy > 0.0);
    CHECK(s.energy <= 1.0);
    CHECK(s.correlation >= -1.0);
    CHECK(s.correlation <= 1.0);
  }
}
