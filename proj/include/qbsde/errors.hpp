#pragma once

#include <stdexcept>
#include <string>

namespace qbsde {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An argument violated a documented precondition (bad domain, empty grid, ...).
struct PreconditionError : Error {
  using Error::Error;
};

/// A configuration file or scenario description is malformed; the message
/// names the offending key.
struct ConfigError : Error {
  using Error::Error;
};

/// A user-supplied coefficient or driver rule returned a non-finite value.
struct CoefficientEvalError : Error {
  using Error::Error;
};

/// A reference computation (quadrature, closed form) failed to converge.
struct OracleFailureError : Error {
  using Error::Error;
};

/// The regression design matrix is numerically rank deficient.
struct IllConditionedBasisError : Error {
  IllConditionedBasisError(const std::string& msg, double cond)
      : Error(msg), condition_number(cond) {}
  double condition_number;
};

/// Transforming the terminal value produced a non-finite number.
struct TerminalOverflowError : Error {
  using Error::Error;
};

/// The per-step fixed-point iteration stopped contracting.
struct StepDivergenceError : Error {
  StepDivergenceError(const std::string& msg, std::size_t step)
      : Error(msg), step_index(step) {}
  std::size_t step_index;
};

/// A simulated state became non-finite; names the first offending sample.
struct SimulationBlowupError : Error {
  SimulationBlowupError(const std::string& msg, std::size_t path, std::size_t step)
      : Error(msg), path_index(path), step_index(step) {}
  std::size_t path_index;
  std::size_t step_index;
};

/// The two sides of an ordered comparison do not satisfy the required
/// pointwise ordering.
struct InvalidComparisonError : Error {
  using Error::Error;
};

/// Filesystem read/write failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace qbsde
