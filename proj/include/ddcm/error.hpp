#pragma once

#include <stdexcept>
#include <string>

namespace ddcm {

/// Base of every error the engine throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes. `axis()` names the offending axis ("n", "c", "h", "w", "rank").
class ShapeError : public Error {
 public:
  ShapeError(std::string op, std::string axis, long long expected, long long actual)
      : Error(op + ": dimension mismatch on axis '" + axis + "' (expected " +
              std::to_string(expected) + ", got " + std::to_string(actual) + ")"),
        axis_(std::move(axis)) {}
  ShapeError(const std::string& what, std::string axis) : Error(what), axis_(std::move(axis)) {}

  const std::string& axis() const noexcept { return axis_; }

 private:
  std::string axis_;
};

/// Invalid configuration, layer spec or argument value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable/inconsistent dataset, image or label data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized tensor or checkpoint file.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// NaN/Inf, divergence or misuse of the autodiff tape.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddcm
