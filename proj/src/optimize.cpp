#include "optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cml::detail {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& options) {
  const std::size_t d = x0.size();
  BfgsResult r;
  r.x = std::move(x0);
  r.gradient.assign(d, 0.0);
  r.value = f(r.x, r.gradient);
  if (!std::isfinite(r.value)) {
    r.message = "objective not finite at the starting point";
    return r;
  }

  // Inverse Hessian approximation, row-major.
  std::vector<double> h(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) h[i * d + i] = 1.0;
  bool scaled = false;

  std::vector<double> dir(d), x_new(d), g_new(d), s(d), y(d), hy(d);
  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    if (max_abs(r.gradient) <= options.gradient_tolerance) {
      r.converged = true;
      r.message = "gradient tolerance reached";
      return r;
    }
    for (std::size_t i = 0; i < d; ++i) {
      dir[i] = 0.0;
      for (std::size_t j = 0; j < d; ++j) dir[i] -= h[i * d + j] * r.gradient[j];
    }
    double slope = dot(dir, r.gradient);
    if (slope >= 0.0) {
      // Not a descent direction: restart from steepest descent.
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) h[i * d + i] = 1.0;
      for (std::size_t i = 0; i < d; ++i) dir[i] = -r.gradient[i];
      slope = dot(dir, r.gradient);
      scaled = false;
    }

    double step = 1.0;
    double f_new = INFINITY;
    bool accepted = false;
    for (int trial = 0; trial < 80; ++trial) {
      for (std::size_t i = 0; i < d; ++i) x_new[i] = r.x[i] + step * dir[i];
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= r.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      r.message = "line search failed to decrease the objective";
      return r;
    }

    for (std::size_t i = 0; i < d; ++i) {
      s[i] = x_new[i] - r.x[i];
      y[i] = g_new[i] - r.gradient[i];
    }
    const double sy = dot(s, y);
    const double prev = r.value;
    r.x = x_new;
    r.gradient = g_new;
    r.value = f_new;
    if (sy > 1e-300) {
      if (!scaled) {
        const double gamma = sy / dot(y, y);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) h[i * d + j] = i == j ? gamma : 0.0;
        scaled = true;
      }
      for (std::size_t i = 0; i < d; ++i) {
        hy[i] = 0.0;
        for (std::size_t j = 0; j < d; ++j) hy[i] += h[i * d + j] * y[j];
      }
      const double yhy = dot(y, hy);
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          h[i * d + j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
    }
    if (prev - r.value <= 1e-16 * std::fabs(prev) && max_abs(s) <= 1e-15 * (1.0 + max_abs(r.x))) {
      r.converged = max_abs(r.gradient) <= 1e3 * options.gradient_tolerance;
      r.message = r.converged ? "no further progress at near-zero gradient" : "stalled";
      return r;
    }
  }
  r.converged = max_abs(r.gradient) <= options.gradient_tolerance;
  r.message = r.converged ? "gradient tolerance reached" : "iteration limit reached";
  return r;
}

std::vector<double> numerical_hessian(const Objective& f, std::span<const double> x) {
  const std::size_t d = x.size();
  std::vector<double> hess(d * d, 0.0);
  std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end()), gp(d), gm(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double h = 1e-5 * std::max(1.0, std::fabs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    f(xp, gp);
    f(xm, gm);
    for (std::size_t i = 0; i < d; ++i) hess[i * d + j] = (gp[i] - gm[i]) / (2.0 * h);
    xp[j] = xm[j] = x[j];
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) hess[i * d + j] = hess[j * d + i] = 0.5 * (hess[i * d + j] + hess[j * d + i]);
  return hess;
}

}  // namespace cml::detail
