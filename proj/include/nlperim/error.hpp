#pragma once

#include <stdexcept>
#include <string>

namespace nlperim {

// Base of every error thrown by the library. The CLI maps subclasses onto
// exit codes (2 for ConfigError, 3 for NumericalError, 1 otherwise).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A mathematical precondition failed: singular evaluation, s outside (0,1),
// density passed where only indicators are meaningful.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Shapes do not line up (grid mismatch, wrong dimension, bad file layout).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A field violates the box constraint 0 <= f <= 1 or a mass is infeasible.
class ConstraintError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Divergence, overflow, or a quadrature that refused to converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlperim
