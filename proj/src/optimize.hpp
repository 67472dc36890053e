#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace cml::detail {

/// Returns f(x) and writes the gradient; +inf marks an infeasible point.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BfgsOptions {
  int max_iterations = 1000;
  /// Converged when max |grad_i| <= gradient_tolerance.
  double gradient_tolerance = 1e-8;
};

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> gradient;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Quasi-Newton minimization with backtracking (Armijo) line search.
BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& options);

/// Central-difference Hessian of an analytic gradient, symmetrized.
std::vector<double> numerical_hessian(const Objective& f, std::span<const double> x);

}  // namespace cml::detail
