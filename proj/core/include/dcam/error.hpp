#pragma once

#include <stdexcept>
#include <string>

namespace dcam {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor or operand shapes do not match the operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is invalid or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in a state that cannot serve it
/// (e.g. eval-mode batchnorm before any running statistics exist).
class StateError : public Error {
 public:
  using Error::Error;
};

/// An operation's precondition was violated by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. The message carries "<source>:<line>:".
class ParseError : public Error {
 public:
  ParseError(const std::string& source, long line, const std::string& message)
      : Error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}
  explicit ParseError(const std::string& message) : Error(message), line_(0) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A computation produced (or received) a non-finite value where a finite
/// one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcam
