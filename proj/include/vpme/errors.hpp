#pragma once

#include <stdexcept>
#include <string>

namespace vpme {

// Base class for every failure the library raises. Catching vpme::Error at
// the driver level is enough to map any internal problem to an exit status.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A field, particle state, or derived quantity contains NaN or Inf.
struct NonFiniteError : Error {
  using Error::Error;
};

// Input to the zero-mean Poisson inverse has a mean that is not negligible
// against its magnitude, so no periodic solution exists.
struct NonZeroMeanError : Error {
  using Error::Error;
};

// Smoothing radius outside the accepted range (0, 0.5].
struct InvalidRadiusError : Error {
  using Error::Error;
};

// Two measures fed to the matching-based distance have different point
// counts or non-uniform masses.
struct SizeMismatchError : Error {
  using Error::Error;
};

// Exact matching requested beyond the supported problem size.
struct TooLargeError : Error {
  using Error::Error;
};

// A quantity left the domain where the requested computation is defined
// (e.g. a distance too large for the stability functional's logarithm).
struct OutOfRangeError : Error {
  using Error::Error;
};

// Operands live on different grids or have inconsistent dimensions.
struct DimensionError : Error {
  using Error::Error;
};

// Newton iteration on the screened potential equation failed to reach the
// requested residual within the iteration budget.
struct ConvergenceError : Error {
  using Error::Error;
};

// Diagnostics were requested from a state whose cached fields do not
// correspond to its particle positions.
struct StaleFieldError : Error {
  using Error::Error;
};

// Malformed configuration file or invalid option value.
struct ConfigError : Error {
  using Error::Error;
};

// Unreadable, truncated, or wrongly tagged snapshot / data file.
struct FormatError : Error {
  using Error::Error;
};

}  // namespace vpme
