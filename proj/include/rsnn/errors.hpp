#pragma once

#include <stdexcept>
#include <string>

namespace rsnn {

// Error families map onto the CLI exit codes: config 2, data 3, numerical 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/value violations on in-memory objects. Treated as data errors at the CLI.
struct ValidationError : DataError {
  using DataError::DataError;
};

// File does not start with the expected magic/version.
struct FormatError : DataError {
  using DataError::DataError;
};

// File shorter (or longer) than its header declares.
struct TruncationError : DataError {
  using DataError::DataError;
};

// Payload bytes violate the format's value constraints.
struct CorruptionError : DataError {
  using DataError::DataError;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rsnn
