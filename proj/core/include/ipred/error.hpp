#pragma once

#include <stdexcept>
#include <string>

namespace ipred {

// Base for every error raised by the library. Callers that only care about
// "something in ipred failed" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition on an argument (empty input, bad factor, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Tensor shapes that do not line up.
class ShapeError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// NaN/Inf encountered where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed file or stream.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ipred
