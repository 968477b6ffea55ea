#pragma once

#include <stdexcept>
#include <string>

namespace latticeham {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform (tensor dims, block sizes, vector lengths).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an input value was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed; the message names the failing quantity.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration is malformed. `path()` is the JSON field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace latticeham
