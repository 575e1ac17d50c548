#pragma once

#include <stdexcept>
#include <string>

namespace tensamp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes, modes or index sets that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A plan, checker or precondition refused the request (CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Divergence, singular systems, degenerate anchors (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File format and filesystem failures (CLI exit code 4).
class IoError : public Error {
 public:
  using Error::Error;
};

/// 2 for ShapeError/ValidationError, 3 for NumericalError, 4 for IoError.
inline int exit_code(const Error& e) {
  if (dynamic_cast<const IoError*>(&e) != nullptr) return 4;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return 3;
  return 2;
}

}  // namespace tensamp
