#pragma once

#include <stdexcept>
#include <string>

namespace laglab {

// Error taxonomy shared across the library.  The CLI maps these onto exit
// codes: ConfigError -> 2, everything else thrown past a command -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument values: NaNs, negative radii, asymmetric matrices, ...
struct InvalidInputError : Error {
  using Error::Error;
};

// Parameter point lies outside every atlas chart (or the named chart).
struct DomainError : Error {
  using Error::Error;
};

// A chart evaluation produced non-finite output.
struct EvaluationError : Error {
  using Error::Error;
};

// An affine-chart point too close to the chart's ideal boundary.
struct ChartConditionError : Error {
  using Error::Error;
};

// dpsi is (numerically) rank deficient at the requested point.
struct DegenerateImmersionError : Error {
  using Error::Error;
};

// Configuration file / flag problems.
struct ConfigError : Error {
  using Error::Error;
};

// c < 0 or otherwise unsupported ambient requested.
struct UnsupportedAmbientError : Error {
  using Error::Error;
};

// Internal numerical failure (singular solve, eigensolver stall, ...).
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace laglab
