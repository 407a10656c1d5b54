#pragma once

#include <stdexcept>
#include <string>

namespace mmirt {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `row()` is 1-based; 0 when the error is not tied to a row.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(row ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// A precondition on arguments was violated (bad counts, unknown ids, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmirt
