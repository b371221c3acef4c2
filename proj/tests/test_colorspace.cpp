#include <catch_amalgamated.hpp>

#include "leafscan/colorspace.hpp"
#include "leafscan/random.hpp"
#include "oracles.hpp"

using namespace leafscan;
using Catch::Matchers::WithinAbs;

TEST_CASE("white, black and grays land on the neutral axis") {
  const Lab white = srgb_to_lab(Rgb{255, 255, 255});
  CHECK_THAT(white.l, WithinAbs(100.0, 1e-3));
  CHECK_THAT(white.a, WithinAbs(0.0, 1e-3));
  CHECK_THAT(white.b, WithinAbs(0.0, 1e-3));

  const Lab black = srgb_to_lab(Rgb{0, 0, 0});
  CHECK_THAT(black.l, WithinAbs(0.0, 1e-3));
  CHECK_THAT(black.a, WithinAbs(0.0, 1e-3));
  CHECK_THAT(black.b, WithinAbs(0.0, 1e-3));

  double previous = -1.0;
  for (int v = 0; v < 256; ++v) {
    const auto u = static_cast<std::uint8_t>(v);
    const Lab g = srgb_to_lab(Rgb{u, u, u});
    CHECK_THAT(g.l, WithinAbs(oracle::gray_lightness(v), 1e-9));
    CHECK(std::abs(g.a) < 1e-6);
    CHECK(std::abs(g.b) < 1e-6);
    CHECK(g.l > previous);
    previous = g.l;
  }
}

TEST_CASE("primary and secondary colors match the reference conversion") {
  for (const auto& ref : oracle::lab_references()) {
    const Lab lab = srgb_to_lab(Rgb{static_cast<std::uint8_t>(ref.rgb[0]), static_cast<std::uint8_t>(ref.rgb[1]),
                                    static_cast<std::uint8_t>(ref.rgb[2])});
    INFO(ref.rgb[0] << "," << ref.rgb[1] << "," << ref.rgb[2]);
    CHECK_THAT(lab.l, WithinAbs(ref.lab[0], 0.05));
    CHECK_THAT(lab.a, WithinAbs(ref.lab[1], 0.05));
    CHECK_THAT(lab.b, WithinAbs(ref.lab[2], 0.05));
  }
}

TEST_CASE("the RGB to XYZ matrix maps full white to the D65 white point") {
  const auto& m = colorspace::kRgbToXyz;
  const double white[3] = {colorspace::kWhiteX, colorspace::kWhiteY, colorspace::kWhiteZ};
  for (int i = 0; i < 3; ++i) CHECK_THAT(m[i][0] + m[i][1] + m[i][2], WithinAbs(white[i], 1e-12));
}

TEST_CASE("L* stays in range and image conversion is per pixel") {
  Rng rng(5);
  RgbImage img(17, 9);
  for (auto& px : img.pixels()) {
    px = Rgb{static_cast<std::uint8_t>(rng.index(256)), static_cast<std::uint8_t>(rng.index(256)),
             static_cast<std::uint8_t>(rng.index(256))};
  }
  const LabImage lab = srgb_to_lab(img);
  REQUIRE(lab.width() == img.width());
  REQUIRE(lab.height() == img.height());
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      const Lab one = srgb_to_lab(img(r, c));
      CHECK(lab(r, c).l == one.l);
      CHECK(lab(r, c).a == one.a);
      CHECK(lab(r, c).b == one.b);
      CHECK(one.l >= 0.0);
      CHECK(one.l <= 100.0);
    }
  }
}
