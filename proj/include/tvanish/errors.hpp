#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tvanish {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position()` is the 0-based offset of the
/// offending character.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Unbound variable, non-finite intermediate, or non-finite result.
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Symbolic differentiation through a non-differentiable node.
class DiffError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent dimensions or malformed problem data.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incomplete run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Declared structural decomposition does not match the problem.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during integration: overflow, singular fundamental
/// matrix, or a non-finite derivative. `time()` is where it happened.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double time)
      : Error(what + " at t=" + std::to_string(time)), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace tvanish
