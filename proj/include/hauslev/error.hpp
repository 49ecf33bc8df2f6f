#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hauslev {

// Domain and contract violations use std::domain_error / std::invalid_argument.
// The types below cover the remaining failure classes the CLI maps to exit codes.

/// A configured cell or memory budget would be exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data; `line()` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A density model cannot be built from the requested parameters.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical procedure failed to reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hauslev
