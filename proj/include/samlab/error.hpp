#pragma once

#include <stdexcept>
#include <string>

namespace samlab {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible shapes, e.g. a batch wider than the first layer.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf showed up at an operation boundary.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Binary or text input does not follow its format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Vector lengths or record counts disagree, or a file is truncated.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or violated precondition.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace samlab
