#pragma once

#include <stdexcept>
#include <string>

namespace leafscan {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input: malformed files, out-of-range arguments, unusable data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The lesion region is too small to describe (fewer than two pixels, no
/// horizontal neighbor pairs) or segmentation could not isolate one.
class DegenerateLesion : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown that the algorithms cannot recover from.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace leafscan
