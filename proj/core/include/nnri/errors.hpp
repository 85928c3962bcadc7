#pragma once

#include <stdexcept>
#include <string>

namespace nnri {

// Error categories map 1:1 onto CLI exit codes (config=2, data=3, numeric=4).

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative fit did not reach a usable solution.
class FitError : public NumericError {
 public:
  using NumericError::NumericError;
};

// A single simulation replicate could not be completed (e.g. a response draw
// left an imputation cell without donors after the bounded redraws). The
// study harness counts these and continues.
class ReplicateFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nnri
