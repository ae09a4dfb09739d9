#pragma once

#include <stdexcept>
#include <string>

namespace dml {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dimension or shape disagreement between inputs.
struct ShapeError : Error {
  using Error::Error;
};

/// Degenerate or out-of-contract numeric input (zero vector, non-unit norm,
/// empty batch, missing positives, ...).
struct ValueError : Error {
  using Error::Error;
};

/// Invalid configuration: unknown loss names, bad batch plans, malformed
/// experiment configs, out-of-range parameters.
struct ConfigError : Error {
  using Error::Error;
};

/// File ingestion failure: missing payloads, size mismatches, bad versions,
/// non-finite values in a feature file.
struct DataError : Error {
  using Error::Error;
};

/// A finite computation produced a non-finite result.
struct NumericError : Error {
  using Error::Error;
};

/// API contract violation: stale forward cache, mismatched gradient shapes.
struct ContractError : Error {
  using Error::Error;
};

}  // namespace dml
