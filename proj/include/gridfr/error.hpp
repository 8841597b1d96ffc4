#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gridfr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or parameter value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Shape or dimensionality mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number (0 when unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Numerical breakdown, e.g. a pseudo-inverse with zero retained rank.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridfr
