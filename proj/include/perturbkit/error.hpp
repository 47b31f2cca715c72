#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace perturbkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. line() is 1-based, 0 when not line-addressable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a structural invariant (tree shape,
// permutation length, tensor shape).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Problems with on-disk artifacts: bundles, pair files, CSV targets.
class DataError : public Error {
 public:
  using Error::Error;
};

} // namespace perturbkit
