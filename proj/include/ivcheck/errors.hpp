#pragma once

#include <stdexcept>
#include <string>

namespace ivcheck {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed external input: missing files, bad CSV cells, unknown columns.
class InputError : public Error {
 public:
  explicit InputError(const std::string& msg) : Error(msg) {}
};

// Invalid parameter values or combinations chosen by the caller.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Data fails a statistical precondition: weak instrument, degenerate or
// singular designs, too few rows for the requested procedure.
class StatError : public Error {
 public:
  explicit StatError(const std::string& msg) : Error(msg) {}
};

}  // namespace ivcheck
