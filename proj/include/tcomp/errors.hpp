#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tcomp {

/// Raised when a caller breaks an operation's precondition (bad mode, shape
/// mismatch, out-of-range parameter).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative numerical kernel failed to converge.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::size_t rows, std::size_t cols)
      : std::runtime_error(what + " (" + std::to_string(rows) + "x" + std::to_string(cols) + " matrix)"),
        rows_(rows),
        cols_(cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
};

/// Filesystem failures, always carrying the offending path in the message.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Timing-based calibration could not produce a usable budget.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tcomp
