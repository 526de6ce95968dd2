#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sepbic {

/// Bad input: malformed config, violated precondition, inconsistent grids.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (non-convergence, NaN, grid too small).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Query outside the range a result covers (e.g. DoS outside the box window).
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, std::size_t index)
      : NumericalError(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class GridTooSmallError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace sepbic
