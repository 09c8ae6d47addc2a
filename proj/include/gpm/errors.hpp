#pragma once

#include <stdexcept>
#include <string>

namespace gpm {

/// Input outside the admissible parameter set (bad spectral data, bad grids).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical solve that should not fail did (singular pivot, overflow,
/// inner iteration stall).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-point iteration stopped contracting.
class DivergenceError : public SolverError {
 public:
  DivergenceError(const std::string& what, double ratio)
      : SolverError(what), ratio_(ratio) {}
  double ratio() const noexcept { return ratio_; }

 private:
  double ratio_;
};

}  // namespace gpm
