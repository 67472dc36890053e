#pragma once

// Closed-form predictions used as oracles for the empirical estimators.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "cml/lattice.hpp"

namespace cml {

/// theta = 1 - 1/|det D(T^^p)(z)| for a period-p orbit z_0..z_{p-1}.
/// Throws NumericalError if the orbit is not periodic to 1e-9 and
/// BoundaryError if a point sits on a discontinuity.
double ei_periodic_point(std::span<const LatticeState> orbit, const MapSpec& spec);

/// Extremal index of the diagonal strip from the density trace h(x) = h_n(x,..,x):
///   1 - (1 - gamma)^(1-n) * int h / |T'|^(n-1) / int h.
/// Midpoint quadrature on a grid aligned with the branch boundaries of T.
double ei_sync_formula(const MapSpec& spec, const std::function<double(double)>& trace,
                       std::size_t cells = 10000);

/// Flat-trace asymptotic 1 - (lambda / (1 - gamma))^(n-1).
double ei_sync_flat_asymptotic(std::size_t n, double gamma, double lambda);

struct Q0Bound {
  double value;
  /// False when the bound exceeds 1 and carries no information.
  bool meaningful;
};

/// limsup q_0 <= lambda^(n-1) sup_h / ((1 - gamma)^(n-1) inf_h).
Q0Bound ei_upper_bound_q0(std::size_t n, double gamma, double lambda, double sup_h, double inf_h);

/// Probability of NOT having synchronized (to accuracy a_c) within m steps:
/// exp(-theta m a_c^(n-1)).
double first_sync_probability(double m, double accuracy, std::size_t n, double theta);

/// 1 - first_sync_probability: probability of at least one synchronization by m.
double sync_by_probability(double m, double accuracy, std::size_t n, double theta);

/// Probability of NOT having localized within m steps: exp(-m a_c^n).
double first_localization_probability(double m, double accuracy, std::size_t n);

struct IterationCount {
  double log10_m;
  /// Exact ceiling when m < 2^53.
  std::optional<std::uint64_t> exact;
};

/// Smallest m with sync_by_probability(m) >= p_target:
/// m = ceil(-ln(1 - p_target) / (theta a_c^(n-1))), computed in log10.
IterationCount iterations_for_sync(double p_target, double accuracy, std::size_t n, double theta);

/// Leb(S_{m,gamma}) / Leb(S_m) = (1 - gamma)^(1-n).
double leb_ratio(std::size_t n, double gamma);

/// (2 nu)^(n-1), an upper bound on the Lebesgue measure of the strip.
double strip_measure_upper_bound(std::size_t n, double nu);

/// Exact Lebesgue measure of {max_i x_i - min_i x_i <= nu} in [0,1]^n:
/// n nu^(n-1) - (n-1) nu^n.
double strip_measure_exact(std::size_t n, double nu);

}  // namespace cml
