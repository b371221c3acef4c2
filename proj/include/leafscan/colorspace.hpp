#pragma once

#include <array>
#include <cmath>

#include "leafscan/raster.hpp"

namespace leafscan {

namespace colorspace {

/// D65 reference white, Y normalized to 1.
inline constexpr double kWhiteX = 0.95047;
inline constexpr double kWhiteY = 1.0;
inline constexpr double kWhiteZ = 1.08883;

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Linear sRGB -> CIE XYZ, built from the sRGB primaries' chromaticities and
/// the white point above so that every row sums to that white exactly. The
/// four-decimal published matrix is off by 1e-7 in its Y row, enough to leave
/// neutral grays with |a*| around 1e-5.
constexpr Matrix3 make_rgb_to_xyz() {
  constexpr double xy[3][2] = {{0.64, 0.33}, {0.30, 0.60}, {0.15, 0.06}};
  Matrix3 m{};
  for (int c = 0; c < 3; ++c) {
    const double x = xy[c][0], y = xy[c][1];
    m[0][c] = x / y;
    m[1][c] = 1.0;
    m[2][c] = (1.0 - x - y) / y;
  }
  // Solve m * s = white by Cramer's rule.
  auto det = [](const Matrix3& a) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double white[3] = {kWhiteX, kWhiteY, kWhiteZ};
  const double d = det(m);
  double s[3]{};
  for (int c = 0; c < 3; ++c) {
    Matrix3 t = m;
    for (int r = 0; r < 3; ++r) t[r][c] = white[r];
    s[c] = det(t) / d;
  }
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m[r][c] *= s[c];
  }
  return m;
}

inline constexpr Matrix3 kRgbToXyz = make_rgb_to_xyz();

/// Inverse sRGB companding of a channel value in [0, 1].
inline double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

/// CIE f(t): cube root above (6/29)^3, linear segment below.
inline double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  constexpr double delta3 = delta * delta * delta;
  return t > delta3 ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

inline Lab xyz_to_lab(double x, double y, double z) {
  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);
  return Lab{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace colorspace

inline Lab srgb_to_lab(Rgb pixel) {
  using namespace colorspace;
  const std::array<double, 3> lin{srgb_to_linear(pixel.r / 255.0),
                                  srgb_to_linear(pixel.g / 255.0),
                                  srgb_to_linear(pixel.b / 255.0)};
  std::array<double, 3> xyz{};
  for (int i = 0; i < 3; ++i) {
    xyz[i] = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] + kRgbToXyz[i][2] * lin[2];
  }
  Lab lab = xyz_to_lab(xyz[0], xyz[1], xyz[2]);
  // Rounding in the matrix can push white a hair past 100.
  if (lab.l > 100.0) lab.l = 100.0;
  if (lab.l < 0.0) lab.l = 0.0;
  return lab;
}

inline LabImage srgb_to_lab(const RgbImage& img) {
  LabImage out(img.width(), img.height());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = srgb_to_lab(src[i]);
  return out;
}

}  // namespace leafscan
