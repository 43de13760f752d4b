#pragma once

#include <stdexcept>
#include <string>

namespace gmmdr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or unsupported combinations (CLI exit code 1).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File system, parse and schema problems (CLI exit code 2).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A mixture component collapsed: weight below 1/(2n) or a covariance
/// eigenvalue below the variance floor in every initialization.
class DegenerateFit : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Covariance matrix that cannot be factored or inverted reliably.
class SingularMatrix : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace gmmdr
