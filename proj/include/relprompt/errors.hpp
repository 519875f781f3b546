#pragma once

#include <stdexcept>
#include <string>

namespace relprompt {

// Base of every error the library throws. Each subclass maps onto one CLI
// exit code (see tools/relprompt.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file content (JSON syntax, schema).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Invalid parameters or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A language model was used in a state that does not support the call.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Network or protocol failure talking to a remote model server.
class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace relprompt
