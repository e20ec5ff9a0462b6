#pragma once

#include <stdexcept>
#include <string>

namespace scho {

/// Base class of every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A configuration or precondition violation (bad grid size, unknown key, ...).
struct ConfigError : Error {
  using Error::Error;
};

/// An operation called with inputs outside its documented domain.
struct PreconditionError : Error {
  using Error::Error;
};

/// Two fields (or sequences) whose layouts do not match.
struct ShapeError : Error {
  using Error::Error;
};

/// Non-finite values or a breakdown inside an iteration.
struct NumericalError : Error {
  using Error::Error;
};

/// An iterative solve that did not reach its tolerance. Carries the time step
/// at which it happened when raised from a time-marching solver (-1 otherwise).
struct SolverError : Error {
  SolverError(const std::string& what, int step = -1)
      : Error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what), step(step) {}
  int step;
};

/// File format, version or filesystem problems.
struct IoError : Error {
  using Error::Error;
};

}  // namespace scho
