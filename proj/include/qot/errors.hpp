#pragma once

#include <stdexcept>
#include <string>

namespace qot {

/// Bad arguments or malformed configuration (CLI exit code 2).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Rejection sampling exhausted its attempt budget (CLI exit code 3).
struct SamplingFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linear algebra breakdown inside a solver (CLI exit code 4).
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Too few usable points for a log-log regression.
struct FitFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qot
