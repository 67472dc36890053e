#include "cml/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cml/error.hpp"

namespace cml {
namespace {

void require_hypothesis(double gamma, double lambda) {
  if (!(gamma < 1.0 - lambda))
    throw HypothesisError("coupling gamma = " + std::to_string(gamma) +
                          " violates gamma < 1 - lambda = " + std::to_string(1.0 - lambda));
}

double circle_distance(double a, double b) {
  const double d = std::fabs(a - b);
  return std::min(d, 1.0 - d);
}

}  // namespace

double ei_periodic_point(std::span<const LatticeState> orbit, const MapSpec& spec) {
  if (orbit.empty()) throw std::invalid_argument("ei_periodic_point: empty orbit");
  double log_det = 0.0;
  for (std::size_t t = 0; t < orbit.size(); ++t) {
    const LatticeState image = step(orbit[t], spec);
    const LatticeState& expected = orbit[(t + 1) % orbit.size()];
    for (std::size_t i = 0; i < spec.n; ++i)
      if (circle_distance(image[i], expected[i]) > 1e-9)
        throw NumericalError("ei_periodic_point: orbit is not periodic under the lattice map");
    log_det += std::log(jacobian_det(orbit[t], spec));
  }
  return 1.0 - std::exp(-log_det);
}

double ei_sync_formula(const MapSpec& spec, const std::function<double(double)>& trace,
                       std::size_t cells) {
  const LocalMap& map = spec.local_map;
  require_hypothesis(spec.gamma, map.expansion_bound());
  if (cells == 0) throw std::invalid_argument("ei_sync_formula: need at least one cell");
  const double power = static_cast<double>(spec.n - 1);
  auto bounds = map.boundaries();
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
    const double lo = bounds[b];
    const double width = bounds[b + 1] - lo;
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(width * cells)));
    const double h = width / static_cast<double>(m);
    const double slope = std::fabs(map.branches()[b].slope);
    const double weight = std::pow(slope, -power);
    for (std::size_t i = 0; i < m; ++i) {
      const double v = trace(lo + (static_cast<double>(i) + 0.5) * h);
      if (!std::isfinite(v) || v < 0.0) throw NumericalError("ei_sync_formula: invalid density trace value");
      numerator += h * v * weight;
      denominator += h * v;
    }
  }
  if (!(denominator > 0.0)) throw NumericalError("ei_sync_formula: density trace integrates to zero");
  const double theta = 1.0 - std::pow(1.0 - spec.gamma, -power) * numerator / denominator;
  return std::clamp(theta, 0.0, 1.0);
}

double ei_sync_flat_asymptotic(std::size_t n, double gamma, double lambda) {
  require_hypothesis(gamma, lambda);
  return 1.0 - std::exp(static_cast<double>(n - 1) * std::log(lambda / (1.0 - gamma)));
}

Q0Bound ei_upper_bound_q0(std::size_t n, double gamma, double lambda, double sup_h, double inf_h) {
  require_hypothesis(gamma, lambda);
  if (!(inf_h > 0.0)) throw std::invalid_argument("ei_upper_bound_q0: inf_h must be > 0");
  if (sup_h < inf_h) throw std::invalid_argument("ei_upper_bound_q0: sup_h < inf_h");
  const double value = std::pow(lambda / (1.0 - gamma), static_cast<double>(n - 1)) * sup_h / inf_h;
  return {value, value <= 1.0};
}

namespace {
void check_probability_args(double m, double accuracy, double theta) {
  if (!(m >= 0.0)) throw std::invalid_argument("iteration count must be >= 0");
  if (!(accuracy > 0.0 && accuracy < 1.0)) throw std::invalid_argument("accuracy must lie in (0, 1)");
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [0, 1]");
}
}  // namespace

double first_sync_probability(double m, double accuracy, std::size_t n, double theta) {
  check_probability_args(m, accuracy, theta);
  if (m == 0.0 || theta == 0.0) return 1.0;
  const double log_tau = std::log(m) + static_cast<double>(n - 1) * std::log(accuracy);
  return std::exp(-theta * std::exp(log_tau));
}

double sync_by_probability(double m, double accuracy, std::size_t n, double theta) {
  check_probability_args(m, accuracy, theta);
  if (m == 0.0 || theta == 0.0) return 0.0;
  const double log_tau = std::log(m) + static_cast<double>(n - 1) * std::log(accuracy);
  return -std::expm1(-theta * std::exp(log_tau));
}

double first_localization_probability(double m, double accuracy, std::size_t n) {
  check_probability_args(m, accuracy, 1.0);
  if (m == 0.0) return 1.0;
  const double log_tau = std::log(m) + static_cast<double>(n) * std::log(accuracy);
  return std::exp(-std::exp(log_tau));
}

IterationCount iterations_for_sync(double p_target, double accuracy, std::size_t n, double theta) {
  if (!(p_target > 0.0 && p_target < 1.0)) throw std::invalid_argument("p_target must lie in (0, 1)");
  if (!(accuracy > 0.0 && accuracy < 1.0)) throw std::invalid_argument("accuracy must lie in (0, 1)");
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::invalid_argument("iterations_for_sync: theta must lie in (0, 1]; theta = 0 never synchronizes");
  const double ln_m = std::log(-std::log1p(-p_target)) - std::log(theta) -
                      static_cast<double>(n - 1) * std::log(accuracy);
  IterationCount out{ln_m / std::log(10.0), std::nullopt};
  if (ln_m < 53.0 * std::log(2.0)) out.exact = static_cast<std::uint64_t>(std::ceil(std::exp(ln_m)));
  return out;
}

double leb_ratio(std::size_t n, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("leb_ratio: gamma must lie in [0, 1)");
  return std::pow(1.0 - gamma, 1.0 - static_cast<double>(n));
}

double strip_measure_upper_bound(std::size_t n, double nu) {
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("strip accuracy must lie in (0, 1)");
  return std::pow(2.0 * nu, static_cast<double>(n - 1));
}

double strip_measure_exact(std::size_t n, double nu) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("strip accuracy must lie in [0, 1]");
  const double nd = static_cast<double>(n);
  return nd * std::pow(nu, nd - 1.0) - (nd - 1.0) * std::pow(nu, nd);
}

}  // namespace cml
