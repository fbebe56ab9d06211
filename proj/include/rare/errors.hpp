#pragma once

#include <stdexcept>
#include <string>

namespace rare {

/// Raised when a caller violates an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a kernel matrix stays indefinite after jitter escalation.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySelection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base class for every failure reported by an evaluation oracle.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OracleTimeout : public OracleError {
 public:
  using OracleError::OracleError;
};

class OracleProtocolError : public OracleError {
 public:
  using OracleError::OracleError;
};

class OracleExited : public OracleError {
 public:
  using OracleError::OracleError;
};

/// Configuration problem tied to a line of the input file (0 when unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace rare
