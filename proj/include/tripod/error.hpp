#pragma once

#include <stdexcept>
#include <string>

namespace tripod {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside an operation's domain (log of a nonpositive value, n_p < 2, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced by a computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration or unreadable input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// No checkpoint satisfied the reconstruction filter.
class SelectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace tripod
