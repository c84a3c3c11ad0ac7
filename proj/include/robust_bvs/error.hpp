#pragma once

#include <stdexcept>
#include <string>

namespace rbvs {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind {
  config = 2,
  data = 3,
  numeric = 4,
  validation = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Invalid configuration or hyperparameters, including precondition violations
/// on numeric entry points.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Rank-deficient design; `columns` names the offending columns.
class SingularDesignError : public DataError {
 public:
  SingularDesignError(const std::string& what, std::string columns)
      : DataError(what), columns_(std::move(columns)) {}
  const std::string& columns() const noexcept { return columns_; }

 private:
  std::string columns_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

}  // namespace rbvs
