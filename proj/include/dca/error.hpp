#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dca {

/// Base for every error raised by the engine, the stores and the service.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON syntax, vector file syntax).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed input whose shape does not match the schema. `path` is a JSON pointer.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Input that matches the schema but breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Missing or unknown credentials (`unauthenticated`), or a role that may not act.
class AuthorizationError : public Error {
 public:
  explicit AuthorizationError(const std::string& what, bool unauthenticated = false)
      : Error(what), unauthenticated_(unauthenticated) {}

  bool unauthenticated() const { return unauthenticated_; }

 private:
  bool unauthenticated_;
};

/// An item reference that was minted under a different engine configuration.
class StaleReferenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace dca
