#pragma once

// Seeded generators for controlled experiments: separable feature blobs and
// toy leaf images with a known lesion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "leafscan/error.hpp"
#include "leafscan/random.hpp"
#include "leafscan/raster.hpp"

namespace leafscan {

struct BlobDataset {
  Eigen::MatrixXd features;  // one row per sample
  std::vector<int> labels;
};

/// `classes` isotropic Gaussian blobs of spread `sigma` in `dims` dimensions.
/// Class c is centered at `spacing` along axis c, so any two centers lie
/// spacing * sqrt(2) apart. Samples are dealt round-robin over the classes.
inline BlobDataset make_blobs(int n, int classes, int dims, double spacing, double sigma,
                              std::uint64_t seed) {
  if (classes < 1 || classes > dims) throw InputError("make_blobs: need 1 <= classes <= dims");
  Rng rng(seed);
  BlobDataset out{Eigen::MatrixXd(n, dims), std::vector<int>(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    const int c = i % classes;
    out.labels[static_cast<std::size_t>(i)] = c;
    for (int j = 0; j < dims; ++j) {
      out.features(i, j) = (j == c ? spacing : 0.0) + sigma * rng.normal();
    }
  }
  return out;
}

struct SyntheticLeaf {
  RgbImage image;
  Mask lesion;  // ground truth
};

/// Green disc on a pale background with one brown circular spot. Every
/// channel gets independent uniform noise of +/- `noise` levels. A close-up
/// leaf fills the whole frame.
inline SyntheticLeaf make_leaf(std::size_t size, std::uint64_t seed, Rgb spot_color = {140, 85, 40},
                               int noise = 6, bool close_up = false) {
  Rng rng(seed);
  SyntheticLeaf out{RgbImage(size, size), Mask(size, size, 0)};
  const double s = static_cast<double>(size);
  const double cx = s / 2.0, cy = s / 2.0, leaf_r = 0.42 * s;
  const double spot_r = s * rng.uniform(0.08, 0.14);
  const double angle = rng.uniform(0.0, 6.283185307179586);
  const double dist = rng.uniform(0.0, leaf_r - spot_r - 1.0);
  const double sx = cx + dist * std::cos(angle), sy = cy + dist * std::sin(angle);
  const Rgb leaf{60, 140, 50};
  const Rgb background{235, 235, 230};
  auto jitter = [&](std::uint8_t v) {
    const int n = static_cast<int>(rng.index(static_cast<std::uint64_t>(2 * noise + 1))) - noise;
    return static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + n, 0, 255));
  };
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const double x = c + 0.5, y = r + 0.5;
      Rgb base = background;
      if (close_up || std::hypot(x - cx, y - cy) <= leaf_r) base = leaf;
      if (std::hypot(x - sx, y - sy) <= spot_r) {
        base = spot_color;
        out.lesion(r, c) = 1;
      }
      out.image(r, c) = Rgb{jitter(base.r), jitter(base.g), jitter(base.b)};
    }
  }
  return out;
}

}  // namespace leafscan
