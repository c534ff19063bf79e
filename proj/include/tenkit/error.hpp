#pragma once

#include <stdexcept>
#include <string>

namespace tenkit {

/// Shapes, modes or ranks that do not fit together.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Input that violates a documented precondition (asymmetric tensor, empty sample set, ...).
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A solver diverged, produced non-finite values, or a factorization broke down.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Problem too large for a method that works on the dense grid.
class ScaleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace tenkit
