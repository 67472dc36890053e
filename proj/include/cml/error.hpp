#pragma once

#include <stdexcept>
#include <string>

namespace cml {

/// Invalid user configuration or arguments (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to produce a trustworthy result (CLI exit
/// code 3): non-convergence, degenerate samples, empty quadrature.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates the expansion/coupling hypothesis gamma < 1 - lambda
/// required by the extremal-index formulas.
class HypothesisError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A lattice component sits exactly on a discontinuity of the local map.
class BoundaryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace cml
