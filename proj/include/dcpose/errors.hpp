#pragma once

#include <stdexcept>
#include <string>

namespace dcpose {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A point could not be projected because it lies at or behind the camera.
class BehindCamera : public Error {
 public:
  using Error::Error;
};

class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

/// Configuration file problems (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset / file problems (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during optimization (CLI exit code 4).
class NumericalAbort : public Error {
 public:
  NumericalAbort(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace dcpose
