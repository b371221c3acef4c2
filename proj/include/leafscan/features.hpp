#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leafscan/error.hpp"
#include "leafscan/raster.hpp"

namespace leafscan {

inline constexpr int kDefaultGrayLevels = 8;
inline constexpr std::size_t kFeatureCount = 13;

/// Gray-level raster; kAbsentLevel marks pixels outside the lesion.
using GrayImage = Raster<int>;
inline constexpr int kAbsentLevel = -1;

/// Normalized symmetric gray-level co-occurrence matrix q(x, y).
struct Glcm {
  int levels = 0;
  std::vector<double> q;  // levels x levels, row-major

  double operator()(int x, int y) const { return q[static_cast<std::size_t>(x * levels + y)]; }
};

struct GlcmStats {
  double contrast = 0.0;
  double correlation = 0.0;
  double energy = 0.0;
  double homogeneity = 0.0;
  double idm = 0.0;
  double entropy = 0.0;
};

/// Population moments of lesion intensities.
struct PixelStats {
  double mean = 0.0;
  double stddev = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;  // excess kurtosis
  double smoothness = 0.0;
  double rms = 0.0;
};

/// Slot order of the thirteen descriptors. Stable: it is the CSV column order
/// and the network input order.
enum class Feature : std::size_t {
  Contrast = 0,
  Correlation,
  Energy,
  Homogeneity,
  Mean,
  StdDev,
  Kurtosis,
  Skewness,
  Variance,
  Smoothness,
  Idm,
  Rms,
  Entropy,
};

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names{
      "contrast", "correlation", "energy",     "homogeneity", "mean",
      "std_dev",  "kurtosis",    "skewness",   "variance",    "smoothness",
      "idm",      "rms",         "entropy"};
  return names;
}

struct QuantizedLesion {
  GrayImage gray;
  std::vector<double> intensities;  // L*/100 of each lesion pixel, row-major
};

/// Lesion intensities L*/100 and their gray levels floor(v * levels), with
/// the top value clamped into the last level.
inline QuantizedLesion quantize_gray(const LabImage& lab, const Mask& mask, int levels) {
  if (levels < 2) throw InputError("quantize_gray: levels must be >= 2");
  if (mask.width() != lab.width() || mask.height() != lab.height()) {
    throw InputError("quantize_gray: mask and image sizes differ");
  }
  if (count_selected(mask) < 2) throw DegenerateLesion("degenerate lesion");
  QuantizedLesion out{GrayImage(lab.width(), lab.height(), kAbsentLevel), {}};
  auto px = lab.pixels();
  auto sel = mask.pixels();
  auto gray = out.gray.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (!sel[i]) continue;
    const double v = std::clamp(px[i].l / 100.0, 0.0, 1.0);
    const int level = std::min(static_cast<int>(std::floor(v * levels)), levels - 1);
    gray[i] = level;
    out.intensities.push_back(v);
  }
  return out;
}

/// Co-occurrences at offset (0, +1) between present pixels, counted in both
/// orders and normalized.
inline Glcm compute_glcm(const GrayImage& gray, int levels) {
  if (levels < 2) throw InputError("compute_glcm: levels must be >= 2");
  const auto g = static_cast<std::size_t>(levels);
  std::vector<std::uint64_t> counts(g * g, 0);
  std::uint64_t total = 0;
  for (std::size_t r = 0; r < gray.height(); ++r) {
    for (std::size_t c = 0; c + 1 < gray.width(); ++c) {
      const int a = gray(r, c);
      const int b = gray(r, c + 1);
      if (a == kAbsentLevel || b == kAbsentLevel) continue;
      if (a < 0 || b < 0 || a >= levels || b >= levels) {
        throw InputError("compute_glcm: gray level out of range");
      }
      ++counts[static_cast<std::size_t>(a) * g + static_cast<std::size_t>(b)];
      ++counts[static_cast<std::size_t>(b) * g + static_cast<std::size_t>(a)];
      total += 2;
    }
  }
  if (total == 0) throw DegenerateLesion("no co-occurrence pairs");
  Glcm out{levels, std::vector<double>(g * g)};
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.q[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return out;
}

inline GlcmStats glcm_features(const Glcm& glcm) {
  const int n = glcm.levels;
  std::vector<double> marginal(static_cast<std::size_t>(n), 0.0);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) marginal[x] += glcm(x, y);
  }
  double mu = 0.0;
  for (int x = 0; x < n; ++x) mu += x * marginal[x];
  double var = 0.0;
  for (int x = 0; x < n; ++x) var += (x - mu) * (x - mu) * marginal[x];

  GlcmStats s;
  double cov = 0.0;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      const double q = glcm(x, y);
      const double d = x - y;
      s.contrast += d * d * q;
      cov += (x - mu) * (y - mu) * q;
      s.energy += q * q;
      s.homogeneity += q / (1.0 + std::abs(d));
      s.idm += q / (1.0 + d * d);
      if (q > 0.0) s.entropy -= q * std::log(q);
    }
  }
  // The matrix is symmetric, so both marginals share mu and var.
  s.correlation = var > 0.0 ? std::clamp(cov / var, -1.0, 1.0) : 0.0;
  return s;
}

/// Population moments. The input is sorted first so the result does not
/// depend on pixel visiting order, down to the last bit.
inline PixelStats pixel_statistics(std::span<const double> intensities) {
  if (intensities.size() < 2) throw DegenerateLesion("degenerate lesion");
  std::vector<double> v(intensities.begin(), intensities.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());

  PixelStats s;
  if (v.front() == v.back()) {
    s.mean = v.front();
    s.rms = std::abs(v.front());
    return s;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, sq = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    sq += x * x;
  }
  s.variance = m2 / n;
  s.stddev = std::sqrt(s.variance);
  s.skewness = (m3 / n) / (s.variance * s.stddev);
  s.kurtosis = (m4 / n) / (s.variance * s.variance) - 3.0;
  s.smoothness = 1.0 - 1.0 / (1.0 + s.variance);
  s.rms = std::sqrt(sq / n);
  return s;
}

/// Throws InternalError when a descriptor leaves its mathematical range.
inline void check_feature_ranges(const FeatureVector& f, int levels) {
  constexpr double eps = 1e-12;
  auto in = [](double v, double lo, double hi) { return v >= lo - eps && v <= hi + eps; };
  const bool ok = f.finite() && f[Feature::Energy] > 0.0 && in(f[Feature::Energy], 0.0, 1.0) &&
                  f[Feature::Homogeneity] > 0.0 && in(f[Feature::Homogeneity], 0.0, 1.0) &&
                  f[Feature::Idm] > 0.0 && in(f[Feature::Idm], 0.0, 1.0) &&
                  in(f[Feature::Correlation], -1.0, 1.0) &&
                  in(f[Feature::Entropy], 0.0, 2.0 * std::log(static_cast<double>(levels))) &&
                  f[Feature::Contrast] >= 0.0 && f[Feature::Rms] >= 0.0;
  if (!ok) throw InternalError("feature vector outside its valid ranges");
}

inline FeatureVector extract_features(const LabImage& lab, const Mask& mask,
                                      int levels = kDefaultGrayLevels) {
  const QuantizedLesion lesion = quantize_gray(lab, mask, levels);
  const GlcmStats tex = glcm_features(compute_glcm(lesion.gray, levels));
  const PixelStats px = pixel_statistics(lesion.intensities);

  FeatureVector f;
  f[Feature::Contrast] = tex.contrast;
  f[Feature::Correlation] = tex.correlation;
  f[Feature::Energy] = tex.energy;
  f[Feature::Homogeneity] = tex.homogeneity;
  f[Feature::Mean] = px.mean;
  f[Feature::StdDev] = px.stddev;
  f[Feature::Kurtosis] = px.kurtosis;
  f[Feature::Skewness] = px.skewness;
  f[Feature::Variance] = px.variance;
  f[Feature::Smoothness] = px.smoothness;
  f[Feature::Idm] = tex.idm;
  f[Feature::Rms] = px.rms;
  f[Feature::Entropy] = tex.entropy;
  check_feature_ranges(f, levels);
  return f;
}

}  // namespace leafscan
