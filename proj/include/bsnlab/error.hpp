#pragma once

#include <stdexcept>
#include <string>

namespace bsnlab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied parameters (domain bounds, resolution, flags).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Mesh or matrix data violating a structural invariant.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// Numerical failure: factorization breakdown, ambiguous rank or kernel.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace bsnlab
