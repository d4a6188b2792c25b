#pragma once

#include <stdexcept>
#include <string>

namespace dmpcut {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters (mesh family, exponent, subdivision depth, ...).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line number.
class ParseError : public Error {
public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

/// Mesh or function violates a structural invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// c < 0 or f > 0 was sampled somewhere.
class SignConditionError : public Error {
public:
  using Error::Error;
};

class SolverError : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  using Error::Error;
};

class PreconditionError : public Error {
public:
  using Error::Error;
};

class UnsupportedError : public Error {
public:
  using Error::Error;
};

/// Wrong kind of field (vector where scalar is required or vice versa).
class TypeError : public Error {
public:
  using Error::Error;
};

/// Non-finite values produced by user data.
class DataError : public Error {
public:
  using Error::Error;
};

} // namespace dmpcut
