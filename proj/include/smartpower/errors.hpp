#pragma once

#include <stdexcept>
#include <string>

namespace smartpower {

/** Bad user input: malformed config, parameter outside its domain,
 *  structurally infeasible design. Maps to CLI exit code 2. */
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/** Parameter value outside the mathematical domain of an operation. */
struct DomainError : ConfigError {
  using ConfigError::ConfigError;
};

/** A truncation region carries (numerically) zero probability mass. */
struct DegenerateRegionError : ConfigError {
  using ConfigError::ConfigError;
};

/** A latent correlation matrix is not positive definite. */
struct NotPositiveDefiniteError : ConfigError {
  using ConfigError::ConfigError;
};

/** Data-dependent numerical failure during estimation. Exit code 3. */
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/** An estimating-equation design matrix lost full rank (empty cells). */
struct SingularDesignError : NumericError {
  using NumericError::NumericError;
};

/** The GEE solver failed to converge. */
struct DivergenceError : NumericError {
  using NumericError::NumericError;
};

/** A delta-method variance came out nonpositive. */
struct DegenerateVarianceError : NumericError {
  using NumericError::NumericError;
};

/** Calibration target lies outside the achievable range. Exit code 4. */
struct UnreachableTargetError : std::runtime_error {
  double achievable_lo;
  double achievable_hi;
  UnreachableTargetError(const std::string& msg, double lo, double hi)
      : std::runtime_error(msg), achievable_lo(lo), achievable_hi(hi) {}
};

}  // namespace smartpower
