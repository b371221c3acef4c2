#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "leafscan/error.hpp"

namespace leafscan {

/// Row-major 2-d grid of pixels.
template <typename Pixel>
class Raster {
 public:
  using value_type = Pixel;

  Raster() = default;

  Raster(std::size_t width, std::size_t height, Pixel fill = Pixel{})
      : width_(width), height_(height), pixels_(width * height, fill) {
    validate();
  }

  Raster(std::size_t width, std::size_t height, std::vector<Pixel> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    validate();
    if (pixels_.size() != width_ * height_) {
      throw InputError("raster pixel count does not match width x height");
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  Pixel& operator()(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }
  const Pixel& operator()(std::size_t row, std::size_t col) const {
    return pixels_[row * width_ + col];
  }

  std::span<Pixel> pixels() noexcept { return pixels_; }
  std::span<const Pixel> pixels() const noexcept { return pixels_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  void validate() const {
    if (width_ == 0 || height_ == 0) {
      throw InputError("raster dimensions must be at least 1x1");
    }
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<Pixel> pixels_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// CIE L*a*b* triple. L in [0, 100].
struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
  friend bool operator==(const Lab&, const Lab&) = default;
};

using RgbImage = Raster<Rgb>;
using LabImage = Raster<Lab>;
/// Per-pixel selection; 1 = selected. `std::uint8_t` rather than bool so the
/// storage is an ordinary contiguous vector.
using Mask = Raster<std::uint8_t>;

inline std::size_t count_selected(const Mask& mask) {
  std::size_t n = 0;
  for (auto v : mask.pixels()) n += v != 0;
  return n;
}

}  // namespace leafscan
