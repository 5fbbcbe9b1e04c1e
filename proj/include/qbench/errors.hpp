#pragma once

#include <stdexcept>
#include <string>

namespace qbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Object larger than the dense-simulation cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Dimension or qubit-count mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Circuit executed with unbound parameter slots.
class BindingError : public Error {
 public:
  using Error::Error;
};

/// Hamiltonian file is malformed or breaks a required symmetry.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Numerical procedure failed (singular system, indefinite pencil, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File missing or unreadable.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qbench
