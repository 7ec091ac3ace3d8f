#pragma once

#include <stdexcept>
#include <string>

namespace moglow {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not agree for the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a domain violation (log of non-positive, division by zero).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A precondition of the API was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Data that cannot be normalised (zero variance channel and similar).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// A metric that has no value for the given input (e.g. mean of no steps).
class UndefinedResultError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Corrupt, truncated or incompatible binary file.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace moglow
