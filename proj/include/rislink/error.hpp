#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rislink {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: configuration keys, units, bounds, file references.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Shape, role or alignment mismatch between inputs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Requested angle falls outside the sampled element pattern.
class InterpolationRangeError : public Error {
 public:
  using Error::Error;
};

class FrequencyNotFoundError : public Error {
 public:
  using Error::Error;
};

/// (I - S_ii * Gamma) is numerically singular for the given loads.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, double rcond) : Error(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

/// The link has no Tx or no Rx coupling through the surface.
class UnoptimizableError : public Error {
 public:
  using Error::Error;
};

}  // namespace rislink
