#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace jointgrade {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible for an operation.
class ShapeError : public Error {
 public:
  ShapeError(std::string op, std::vector<std::size_t> lhs,
             std::vector<std::size_t> rhs);

  const std::string& op() const { return op_; }
  const std::vector<std::size_t>& lhs() const { return lhs_; }
  const std::vector<std::size_t>& rhs() const { return rhs_; }

 private:
  std::string op_;
  std::vector<std::size_t> lhs_;
  std::vector<std::size_t> rhs_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an API precondition (e.g. backward on a non-scalar).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MappingError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

/// No class has both positive and negative samples.
class UndefinedAucError : public Error {
 public:
  using Error::Error;
};

/// CSV / config / checkpoint parse failure. Row is the 1-based line number
/// in the input (a CSV header is line 1); zero means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t row = 0,
             std::string column = {});

  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace jointgrade
