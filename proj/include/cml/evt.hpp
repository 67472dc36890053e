#pragma once

// Extreme-value statistics: GEV / GPD maximum likelihood, the Suveges
// extremal-index estimator, run clusters and waiting times, first-return
// q_k estimates, and the Poisson / compound Poisson counting laws.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cml/lattice.hpp"

namespace cml {

struct EvtFitResult {
  double xi = 0.0;
  double mu = 0.0;  ///< GEV location; for GPD fits the (fixed) threshold.
  double sigma = 1.0;
  double log_likelihood = 0.0;
  std::size_t n_samples = 0;
  /// Asymptotic standard errors of (xi, mu, sigma); mu's is 0 for GPD fits.
  std::optional<std::array<double, 3>> standard_errors;
  /// Log-likelihood at the probability-weighted-moments start.
  double initial_log_likelihood = 0.0;
  int iterations = 0;
};

struct FitOptions {
  std::size_t min_samples = 30;
  /// Per-sample gradient tolerance of the negative log-likelihood.
  double gradient_tolerance = 1e-10;
  int max_iterations = 1000;
};

/// exp{-[1 + xi (y - mu)/sigma]^(-1/xi)}, Gumbel limit for xi = 0.
double gev_cdf(double y, double mu, double sigma, double xi);
double gev_log_density(double y, double mu, double sigma, double xi);
/// 1 - (1 + xi y/sigma)^(-1/xi) for excesses y >= 0.
double gpd_cdf(double y, double sigma, double xi);
double gpd_log_density(double y, double sigma, double xi);

EvtFitResult fit_gev_mle(std::span<const double> block_maxima, const FitOptions& options = {});

/// Fits the excesses (values - threshold) of `values`, all of which must
/// exceed the threshold.
EvtFitResult fit_gpd_mle(std::span<const double> values, double threshold,
                         const FitOptions& options = {});

/// Maxima of consecutive blocks of `block_size` (a partial last block is
/// dropped).
std::vector<double> block_maxima(std::span<const double> series, std::size_t block_size);

struct ClusterStats {
  std::size_t exceedance_count = 0;
  std::size_t cluster_count = 0;
  /// Lengths of maximal runs of >= 2 consecutive exceedances.
  std::vector<std::size_t> cluster_sizes;
  /// Gaps between consecutive exceedances (>= 1).
  std::vector<std::size_t> waiting_times;
};

ClusterStats extract_clusters(std::span<const std::uint8_t> indicator);

enum class EiMethod { suveges, return_time_qk, theoretical_formula, spectral_ulam };
std::string to_string(EiMethod method);

struct EiMetadata {
  double quantile = 0.0;
  std::size_t n = 0;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
};

struct EiEstimate {
  double theta = 1.0;
  EiMethod method = EiMethod::suveges;
  std::optional<double> uncertainty;
  /// Set when a degenerate-input convention produced theta.
  bool flagged = false;
  std::string note;
  EiMetadata metadata;
};

/// Suveges' likelihood estimator from the inter-exceedance gaps T_i at
/// quantile level q: with S_i = T_i - 1, N the number of gaps and N_c the
/// number of nonzero S_i,
///   theta = (A + N + N_c - sqrt((A + N + N_c)^2 - 8 N_c A)) / (2 A),
///   A = (1 - q) sum S_i.
EiEstimate suveges_ei(std::span<const std::uint8_t> indicator, double q);

/// Normalized histogram of the waiting times, sorted by waiting time.
std::vector<std::pair<std::size_t, double>> waiting_time_epdf(const ClusterStats& stats);

/// CSV `waiting_time,probability`.
void write_epdf_csv(std::ostream& out, std::span<const std::pair<std::size_t, double>> epdf);

struct QkOptions {
  /// Number of q_k reported (k = 0..k_max).
  std::size_t k_max = 50;
  /// theta = 1 - sum_{k <= k_sum} q_k. Only q_0 survives the small-strip
  /// limit for this lattice; later terms at finite accuracy are dominated by
  /// ordinary (non-clustered) returns.
  std::size_t k_sum = 0;
  std::size_t min_visits = 100;
};

struct ReturnTimeEstimate {
  /// q[k]: fraction of visits whose first return takes exactly k + 1 steps.
  std::vector<double> q;
  double theta = 1.0;
  /// Fraction of visits with no return within k_max + 1 steps.
  double tail_fraction = 0.0;
  std::size_t visits = 0;
};

/// Visits are the indices where `in_set` is 1. Visits too close to the end
/// of the series to observe k_max + 1 further steps are not counted.
ReturnTimeEstimate qk_return_estimator(std::span<const std::uint8_t> in_set,
                                       const QkOptions& options = {});

/// Same, for visits of the trajectory to the strip max_{i,j}|x_i - x_j| <= accuracy.
ReturnTimeEstimate qk_return_estimator(const Trajectory& trajectory, double accuracy,
                                       const QkOptions& options = {});

/// 1 where the state lies in the diagonal strip of the given accuracy.
std::vector<std::uint8_t> strip_indicator(const Trajectory& trajectory, double accuracy);

/// e^{-t} t^k / k!, log domain.
double poisson_pmf(double t, std::size_t k);

/// Polya-Aeppli law: Poisson(t(1 - p)) clusters with geometric sizes of
/// parameter 1 - p, so the mean count is t. For k >= 1
///   e^{-t(1-p)} sum_{j=1}^{k} p^{k-j} (1-p)^j (t(1-p))^j / j! C(k-1, j-1),
/// and e^{-t(1-p)} for k = 0.
double compound_poisson_pmf(double t, double p, std::size_t k);

/// Number of visits at steps 1..floor(t / strip_measure) of the indicator
/// (index 0 is the starting point).
std::size_t count_visits(std::span<const std::uint8_t> in_set, double strip_measure, double t);

/// Total-variation distance between two pmfs (missing entries are 0).
double total_variation(std::span<const double> p, std::span<const double> q);

/// JSON record {method, theta, xi, mu, sigma, n, gamma, epsilon, quantile,
/// seed, samples}.
std::string to_json(const EiEstimate& ei, const std::optional<EvtFitResult>& fit = std::nullopt);

}  // namespace cml
