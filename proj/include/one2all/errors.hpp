#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace one2all {

/// Malformed input: dimension mismatches, empty sets, out-of-range parameters.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested operation is not defined for this metric space.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A probability distribution was requested from an all-zero mass vector.
class DegenerateDistribution : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Text input that could not be parsed. `row()` is 1-based; 0 means "not row specific".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : std::runtime_error(row == 0 ? what : "row " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Binary input with a bad magic number, truncated payload or inconsistent header.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace one2all
