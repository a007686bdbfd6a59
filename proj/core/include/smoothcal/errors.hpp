#pragma once

#include <stdexcept>

namespace smoothcal {

// Error taxonomy. The CLI maps these onto stable exit codes: configuration
// and input problems exit 2, file problems exit 3, numerical failures exit 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Hyperparameter or configuration value outside its documented domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Runtime argument violates a precondition (dimension mismatch, value out of
// range, malformed counts).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// A required input (vote data, baseline confidences) is absent.
class MissingDataError : public Error {
 public:
  using Error::Error;
};

// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// File existed but its contents are malformed; the message names the row and
// column where parsing failed.
class ParseError : public IoError {
 public:
  using IoError::IoError;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Metric is undefined for the given inputs (e.g. AUC on a single class).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace smoothcal
