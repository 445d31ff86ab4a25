#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pfreg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed formula text. `position` is a byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t position)
      : Error(msg + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Invalid arguments: unknown variables, non-prime characteristic, bad descriptors.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Enumeration work would exceed the configured cap.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Estimation or partition construction could not produce a consistent answer.
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// A verified property failed (exit status 1 at the CLI).
class CheckFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace pfreg
