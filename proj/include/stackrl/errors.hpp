#pragma once

#include <stdexcept>
#include <string>

namespace stackrl {

// Invalid arguments or violated operation preconditions.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operation not defined for the given configuration (e.g. discrete-only ops
// called on a continuous action space).
struct UnsupportedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or failed numeric preconditions.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Regularized system not positive definite; caller should raise beta.
struct SingularSystemError : NumericError {
  using NumericError::NumericError;
};

// Iterates left the admissible region; message carries the step index.
struct DivergenceError : NumericError {
  using NumericError::NumericError;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file contents; message carries the 1-based line number.
struct ParseError : IoError {
  using IoError::IoError;
};

// Structurally valid file that disagrees with its own header or the
// requested dimensions.
struct SchemaError : IoError {
  using IoError::IoError;
};

// Bad command-line flags or config values (exit code 2 in the CLI).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace stackrl
