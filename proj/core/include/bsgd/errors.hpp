#pragma once

#include <stdexcept>
#include <string>

namespace bsgd {

/// Raised when arguments violate a documented precondition (shape mismatch,
/// non-finite entries, out-of-range exponents, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a run or study cannot complete (divergence, failed validation
/// of operator constants, insufficient data for a fit).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A rate fit has fewer usable points than it needs.
class FitError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace bsgd
