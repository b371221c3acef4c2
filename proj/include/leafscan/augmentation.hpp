#pragma once

#include <vector>

#include "leafscan/error.hpp"
#include "leafscan/raster.hpp"

namespace leafscan {

/// Lossless clockwise rotation by `quarter_turns` x 90 degrees. One turn sends
/// pixel (r, c) of an H x W raster to (c, H - 1 - r) of the W x H result.
template <typename Pixel>
Raster<Pixel> rotate(const Raster<Pixel>& img, int quarter_turns) {
  if (quarter_turns < 1 || quarter_turns > 3) {
    throw InputError("rotate: quarter_turns must be 1, 2 or 3");
  }
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  if (quarter_turns == 2) {
    Raster<Pixel> out(w, h);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) out(h - 1 - r, w - 1 - c) = img(r, c);
    }
    return out;
  }
  Raster<Pixel> out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (quarter_turns == 1) {
        out(c, h - 1 - r) = img(r, c);
      } else {
        out(w - 1 - c, r) = img(r, c);
      }
    }
  }
  return out;
}

template <typename Raster, typename Label>
struct AugmentedSample {
  Raster raster;
  Label label;
  int quarter_turns = 0;  // 0 for the original
};

/// Each input followed by its 90, 180 and 270 degree rotations, labels kept.
/// Apply to the training side of a split only.
template <typename Raster, typename Label>
std::vector<AugmentedSample<Raster, Label>> augment_training_set(
    const std::vector<std::pair<Raster, Label>>& samples) {
  std::vector<AugmentedSample<Raster, Label>> out;
  out.reserve(samples.size() * 4);
  for (const auto& [raster, label] : samples) {
    out.push_back({raster, label, 0});
    for (int turns = 1; turns <= 3; ++turns) {
      out.push_back({rotate(raster, turns), label, turns});
    }
  }
  return out;
}

}  // namespace leafscan
