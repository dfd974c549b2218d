#pragma once

#include <stdexcept>
#include <string>

namespace corecsp {

// Base class for every failure the library reports.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem-level failure (cannot open, cannot write).
class io_error : public error {
 public:
  using error::error;
};

// Structurally malformed or truncated input (ragged CSV, short EDF record).
class parse_error : public error {
 public:
  using error::error;
};

// A value is outside its admissible domain (non-finite sample, bad label).
class value_error : public error {
 public:
  using error::error;
};

// Shape mismatch between operands.
class dimension_error : public error {
 public:
  using error::error;
};

// Invalid specification, configuration or parameter.
class spec_error : public error {
 public:
  using error::error;
};

// Input uses a feature outside the supported subset.
class unsupported_error : public error {
 public:
  using error::error;
};

// Numerical breakdown (singular covariance, degenerate scaling).
class numeric_error : public error {
 public:
  using error::error;
};

// Operation requested before its preconditions were streamed in.
class not_ready_error : public error {
 public:
  using error::error;
};

// Operation on an empty structure or empty input.
class empty_input_error : public error {
 public:
  using error::error;
};

}  // namespace corecsp
