#pragma once

#include <stdexcept>
#include <string>

namespace fobsm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: out-of-range parameters, malformed files, bad configs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input is valid but sits on a limit the closed form cannot evaluate
/// (tau == 0, sigma == 0, constant columns).
class DegenerateInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Dimension mismatch between vectors, matrices or models.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Filesystem failure (cannot open, read or write).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fobsm
