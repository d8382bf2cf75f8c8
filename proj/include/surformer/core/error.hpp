#pragma once

#include <stdexcept>
#include <string>

namespace surformer {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape or dimensionality mismatch between operands.
struct DimensionError : Error {
  using Error::Error;
};

/// Invalid argument value (rates, fractions, counts out of range).
struct ValueError : Error {
  using Error::Error;
};

/// Malformed, truncated or otherwise unusable input data.
struct DataError : Error {
  using Error::Error;
};

/// Operation invoked on an object in the wrong state.
struct StateError : Error {
  using Error::Error;
};

/// Filesystem / serialization failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace surformer
