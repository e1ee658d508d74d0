// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace netcode {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CyclicTopologyError : public Error {
 public:
  using Error::Error;
};

/// (I - F) could not be inverted reliably.
class SingularIFError : public Error {
 public:
  using Error::Error;
};

/// A coding coefficient sits outside the pattern allowed by the topology.
class SparsityViolation : public Error {
 public:
  using Error::Error;
};

class UnknownEdge : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class EmptySupport : public Error {
 public:
  using Error::Error;
};

/// log p(z) fell below the representable floor.
class DensityUnderflow : public Error {
 public:
  using Error::Error;
};

class CostGuardViolation : public Error {
 public:
  using Error::Error;
};

class SingularSystemMatrix : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Finite-difference step is swamped by estimator noise.
class StepTooSmall : public Error {
 public:
  using Error::Error;
};

class MissingCoefficient : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("parse error at line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& key, const std::string& what)
      : Error("invalid config key '" + key + "': " + what), key_(key) {}

  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace netcode
