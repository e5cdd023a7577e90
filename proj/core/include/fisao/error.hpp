#pragma once

#include <stdexcept>
#include <string>

namespace fisao {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or missing input data (files, records, ids).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or a configuration that makes a formula degenerate.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Vectors or matrices whose shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or numerically unrecoverable systems.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fisao
