#pragma once

#include <stdexcept>
#include <string>

namespace qdiscrim {

/// Root of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad parameters, malformed config, unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown during integration (diverged state, non-positive trace).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace qdiscrim
