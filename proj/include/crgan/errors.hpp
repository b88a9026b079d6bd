#pragma once

#include <stdexcept>
#include <string>

namespace crgan {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not compose.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation (bad label, empty input, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API contract (non-scalar loss, mismatched score widths, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A rejection stage received a weight vector whose squared norm is at or below 1e-12.
class DegenerateWeightError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a numerically invalid matrix.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration file or command-line override.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace crgan
