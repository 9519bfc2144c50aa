#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sheafnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Iteration failed to converge or produced non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Input data or configuration is well-formed but semantically invalid.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Filesystem failure; the message names the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sheafnn
