#pragma once

#include <stdexcept>
#include <string>

namespace charparse {

/// Base class for all toolkit errors. The message carries enough context
/// (op name, shapes, file/line) to diagnose without a debugger.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad or inconsistent user input (files, flags, config values).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

/// Numeric failure: shape mismatch, non-finite value, bad op argument.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace charparse
