#pragma once

#include <stdexcept>
#include <string>

namespace tmar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, malformed or degenerate input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed (eigen solver, underflow, non-finite state).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tmar
