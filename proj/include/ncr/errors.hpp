#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ncr {

// Base of every error raised by the library. The CLI maps each subclass to a
// distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point outside a chart domain, component absent from a chart, etc.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Inconsistent model: labels, transitions, vanishing unit factor.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Level or parameter outside its admissible interval.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Malformed document or expression. `line` is 1-based, 0 when unknown.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, int line = 0, std::string path = {})
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line),
        path_(std::move(path)) {}
  int line() const noexcept { return line_; }
  const std::string& path() const noexcept { return path_; }

 private:
  int line_;
  std::string path_;
};

// Vector-field construction or assembly failed; carries the offending point.
class ConstructionError : public Error {
 public:
  ConstructionError(const std::string& what, std::vector<double> witness)
      : Error(what), witness_(std::move(witness)) {}
  const std::vector<double>& witness() const noexcept { return witness_; }

 private:
  std::vector<double> witness_;
};

// Integration failure: step budget exhausted, field evaluation not finite,
// trajectory left the chart.
class FlowError : public Error {
 public:
  using Error::Error;
};

// Angle lift along a path that meets the central fibre.
class LiftError : public Error {
 public:
  using Error::Error;
};

// Missing or contradictory run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ncr
