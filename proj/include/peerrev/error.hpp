#pragma once

#include <stdexcept>
#include <string>

namespace peerrev {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on arguments was violated (nonpositive sigma, bad fraction, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data failed validation (duplicate rows, out-of-range scores, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Not enough data to compute the requested quantity.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace peerrev
