#include "cml/evt.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "cml/error.hpp"
#include "cml/io.hpp"
#include "cml/kernels.hpp"
#include "optimize.hpp"

namespace cml {
namespace {

constexpr double kGumbelBranch = 1e-6;
constexpr double kEulerGamma = 0.57721566490153286061;

void check_scale(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("scale parameter must be > 0");
}

void check_sample(std::span<const double> data, std::size_t floor, const char* what) {
  if (data.size() < floor)
    throw NumericalError(std::string(what) + ": need at least " + std::to_string(floor) +
                         " samples, got " + std::to_string(data.size()));
  for (double v : data)
    if (!std::isfinite(v)) throw NumericalError(std::string(what) + ": non-finite sample");
  auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  if (*lo == *hi) throw NumericalError(std::string(what) + ": degenerate sample (all values equal)");
}

// Negative log-likelihoods. Parameters: GEV (mu, log sigma, xi), GPD
// (log sigma, xi). Near xi = 0 the first-order expansion in xi is used so the
// gradient stays accurate.
double gev_nll(std::span<const double> data, std::span<const double> p, std::span<double> g) {
  const double mu = p[0], ls = p[1], xi = p[2];
  const double sigma = std::exp(ls);
  const double n = static_cast<double>(data.size());
  double nll = n * ls;
  double g0 = 0.0, g1 = n, g2 = 0.0;
  if (std::fabs(xi) < kGumbelBranch) {
    for (double y : data) {
      const double s = (y - mu) / sigma;
      const double e = std::exp(-s);
      const double d_xi = s - 0.5 * s * s + 0.5 * e * s * s;
      nll += s + e + xi * d_xi;
      g0 += -(1.0 - e) / sigma;
      g1 += -(1.0 - e) * s;
      g2 += d_xi;
    }
  } else {
    for (double y : data) {
      const double s = (y - mu) / sigma;
      const double t = 1.0 + xi * s;
      if (!(t > 0.0)) return std::numeric_limits<double>::infinity();
      const double L = std::log1p(xi * s);
      const double r = std::exp(-L / xi);
      nll += (1.0 + 1.0 / xi) * L + r;
      g0 += (-(xi + 1.0) + r) / (sigma * t);
      g1 += (r - (xi + 1.0)) * s / t;
      g2 += -L / (xi * xi) + (1.0 + 1.0 / xi) * s / t + r * (L / (xi * xi) - s / (t * xi));
    }
  }
  if (!g.empty()) {
    g[0] = g0;
    g[1] = g1;
    g[2] = g2;
  }
  return std::isfinite(nll) ? nll : std::numeric_limits<double>::infinity();
}

double gpd_nll(std::span<const double> excess, std::span<const double> p, std::span<double> g) {
  const double ls = p[0], xi = p[1];
  const double sigma = std::exp(ls);
  const double n = static_cast<double>(excess.size());
  double nll = n * ls;
  double g0 = n, g1 = 0.0;
  if (std::fabs(xi) < kGumbelBranch) {
    for (double y : excess) {
      const double t = y / sigma;
      nll += t + xi * (t - 0.5 * t * t);
      g0 += -t + xi * (t * t - t);
      g1 += t - 0.5 * t * t;
    }
  } else {
    for (double y : excess) {
      const double t = y / sigma;
      const double w = 1.0 + xi * t;
      if (!(w > 0.0)) return std::numeric_limits<double>::infinity();
      const double L = std::log1p(xi * t);
      nll += (1.0 + 1.0 / xi) * L;
      g0 += -(xi + 1.0) * t / w;
      g1 += -L / (xi * xi) + (1.0 + 1.0 / xi) * t / w;
    }
  }
  if (!g.empty()) {
    g[0] = g0;
    g[1] = g1;
  }
  return std::isfinite(nll) ? nll : std::numeric_limits<double>::infinity();
}

// Probability-weighted moments b_r = (1/n) sum C(i, r)/C(n-1, r) x_(i),
// 0-based ascending order statistics.
std::array<double, 3> pwm(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fi = static_cast<double>(i);
    b0 += x[i];
    b1 += fi / (n - 1.0) * x[i];
    b2 += fi * (fi - 1.0) / ((n - 1.0) * (n - 2.0)) * x[i];
  }
  return {b0 / n, b1 / n, b2 / n};
}

std::optional<std::array<double, 3>> standard_errors(const detail::Objective& f,
                                                      std::span<const double> x,
                                                      const std::vector<std::size_t>& map_to,
                                                      double sigma, std::size_t log_sigma_index) {
  const std::size_t d = x.size();
  auto hv = detail::numerical_hessian(f, x);
  Eigen::MatrixXd h(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) h(i, j) = hv[i * d + j];
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || (ldlt.vectorD().array() <= 0).any())
    return std::nullopt;
  Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
  std::array<double, 3> se{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < d; ++i) {
    if (!(cov(i, i) > 0.0)) return std::nullopt;
    double v = std::sqrt(cov(i, i));
    if (i == log_sigma_index) v *= sigma;
    se[map_to[i]] = v;
  }
  return se;
}

}  // namespace

double gev_cdf(double y, double mu, double sigma, double xi) {
  check_scale(sigma);
  const double s = (y - mu) / sigma;
  if (xi == 0.0) return std::exp(-std::exp(-s));
  const double t = 1.0 + xi * s;
  if (t <= 0.0) return xi > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-std::log(t) / xi));
}

double gev_log_density(double y, double mu, double sigma, double xi) {
  check_scale(sigma);
  const double s = (y - mu) / sigma;
  if (xi == 0.0) return -std::log(sigma) - s - std::exp(-s);
  const double t = 1.0 + xi * s;
  if (t <= 0.0) return -std::numeric_limits<double>::infinity();
  const double L = std::log(t);
  return -std::log(sigma) - (1.0 + 1.0 / xi) * L - std::exp(-L / xi);
}

double gpd_cdf(double y, double sigma, double xi) {
  check_scale(sigma);
  if (y <= 0.0) return 0.0;
  if (xi == 0.0) return -std::expm1(-y / sigma);
  const double w = 1.0 + xi * y / sigma;
  if (w <= 0.0) return 1.0;
  return -std::expm1(-std::log(w) / xi);
}

double gpd_log_density(double y, double sigma, double xi) {
  check_scale(sigma);
  if (y < 0.0) return -std::numeric_limits<double>::infinity();
  if (xi == 0.0) return -std::log(sigma) - y / sigma;
  const double w = 1.0 + xi * y / sigma;
  if (w <= 0.0) return -std::numeric_limits<double>::infinity();
  return -std::log(sigma) - (1.0 + 1.0 / xi) * std::log(w);
}

EvtFitResult fit_gev_mle(std::span<const double> maxima, const FitOptions& options) {
  check_sample(maxima, std::max<std::size_t>(options.min_samples, 3), "fit_gev_mle");
  std::vector<double> data(maxima.begin(), maxima.end());
  const auto [b0, b1, b2] = pwm(data);

  detail::Objective f = [&data](std::span<const double> p, std::span<double> g) {
    return gev_nll(data, p, g);
  };

  // Hosking-Wallis-Wood PWM start (k = -xi); Gumbel moments as fallback.
  std::vector<std::vector<double>> starts;
  const double c = (2.0 * b1 - b0) / (3.0 * b2 - b0) - std::log(2.0) / std::log(3.0);
  const double k = 7.8590 * c + 2.9554 * c * c;
  if (std::isfinite(k) && std::fabs(k) > 1e-8 && k > -1.0) {
    const double g1 = std::tgamma(1.0 + k);
    const double sigma = (2.0 * b1 - b0) * k / (g1 * (1.0 - std::pow(2.0, -k)));
    if (sigma > 0.0) starts.push_back({b0 + sigma * (g1 - 1.0) / k, std::log(sigma), -k});
  }
  {
    const double sigma = (2.0 * b1 - b0) / std::log(2.0);
    if (sigma > 0.0) starts.push_back({b0 - kEulerGamma * sigma, std::log(sigma), 0.0});
  }
  std::vector<double> start;
  double start_nll = std::numeric_limits<double>::infinity();
  for (auto& s : starts) {
    const double v = f(s, {});
    if (v < start_nll) {
      start_nll = v;
      start = s;
    }
  }
  if (start.empty()) throw NumericalError("fit_gev_mle: no feasible starting point");

  detail::BfgsOptions bo;
  bo.max_iterations = options.max_iterations;
  bo.gradient_tolerance = options.gradient_tolerance * static_cast<double>(data.size());
  auto res = detail::minimize_bfgs(f, start, bo);
  if (!res.converged)
    throw NumericalError("fit_gev_mle: optimizer did not converge (" + res.message + ", " +
                         std::to_string(res.iterations) + " iterations)");

  EvtFitResult out;
  out.mu = res.x[0];
  out.sigma = std::exp(res.x[1]);
  out.xi = res.x[2];
  out.log_likelihood = -res.value;
  out.initial_log_likelihood = -start_nll;
  out.n_samples = data.size();
  out.iterations = res.iterations;
  out.standard_errors = standard_errors(f, res.x, {1, 2, 0}, out.sigma, 1);
  return out;
}

EvtFitResult fit_gpd_mle(std::span<const double> values, double threshold, const FitOptions& options) {
  std::vector<double> excess;
  excess.reserve(values.size());
  for (double v : values) {
    if (!(v > threshold)) throw std::invalid_argument("fit_gpd_mle: value not above threshold");
    excess.push_back(v - threshold);
  }
  check_sample(excess, std::max<std::size_t>(options.min_samples, 3), "fit_gpd_mle");

  detail::Objective f = [&excess](std::span<const double> p, std::span<double> g) {
    return gpd_nll(excess, p, g);
  };

  // Hosking-Wallis PWM start with a_s = E[(1-F)^s Y]; exponential fallback.
  std::vector<double> sorted = excess;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double a0 = 0.0, a1 = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.65) / n;
    a0 += sorted[i];
    a1 += (1.0 - p) * sorted[i];
  }
  a0 /= n;
  a1 /= n;
  std::vector<std::vector<double>> starts;
  if (a0 - 2.0 * a1 > 0.0) {
    const double k = a0 / (a0 - 2.0 * a1) - 2.0;
    const double sigma = 2.0 * a0 * a1 / (a0 - 2.0 * a1);
    if (sigma > 0.0 && std::isfinite(k)) starts.push_back({std::log(sigma), -k});
  }
  starts.push_back({std::log(a0), 0.0});
  std::vector<double> start;
  double start_nll = std::numeric_limits<double>::infinity();
  for (auto& s : starts) {
    const double v = f(s, {});
    if (v < start_nll) {
      start_nll = v;
      start = s;
    }
  }

  detail::BfgsOptions bo;
  bo.max_iterations = options.max_iterations;
  bo.gradient_tolerance = options.gradient_tolerance * n;
  auto res = detail::minimize_bfgs(f, start, bo);
  if (!res.converged)
    throw NumericalError("fit_gpd_mle: optimizer did not converge (" + res.message + ", " +
                         std::to_string(res.iterations) + " iterations)");

  EvtFitResult out;
  out.mu = threshold;
  out.sigma = std::exp(res.x[0]);
  out.xi = res.x[1];
  out.log_likelihood = -res.value;
  out.initial_log_likelihood = -start_nll;
  out.n_samples = excess.size();
  out.iterations = res.iterations;
  out.standard_errors = standard_errors(f, res.x, {2, 0}, out.sigma, 0);
  return out;
}

std::vector<double> block_maxima(std::span<const double> series, std::size_t block_size) {
  if (block_size == 0) throw std::invalid_argument("block_maxima: block size must be > 0");
  std::vector<double> out;
  for (std::size_t start = 0; start + block_size <= series.size(); start += block_size)
    out.push_back(*std::max_element(series.begin() + start, series.begin() + start + block_size));
  return out;
}

ClusterStats extract_clusters(std::span<const std::uint8_t> indicator) {
  ClusterStats st;
  std::size_t run = 0;
  std::size_t last = 0;
  bool seen = false;
  auto close_run = [&] {
    if (run >= 2) {
      ++st.cluster_count;
      st.cluster_sizes.push_back(run);
    }
    run = 0;
  };
  for (std::size_t k = 0; k < indicator.size(); ++k) {
    if (indicator[k]) {
      ++st.exceedance_count;
      ++run;
      if (seen) st.waiting_times.push_back(k - last);
      last = k;
      seen = true;
    } else {
      close_run();
    }
  }
  close_run();
  return st;
}

std::string to_string(EiMethod method) {
  switch (method) {
    case EiMethod::suveges: return "suveges";
    case EiMethod::return_time_qk: return "return_time_qk";
    case EiMethod::theoretical_formula: return "theoretical_formula";
    case EiMethod::spectral_ulam: return "spectral_ulam";
  }
  return "unknown";
}

EiEstimate suveges_ei(std::span<const std::uint8_t> indicator, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("suveges_ei: quantile must lie in (0, 1)");
  EiEstimate est;
  est.method = EiMethod::suveges;
  est.metadata.quantile = q;
  est.metadata.samples = indicator.size();

  std::size_t exceedances = 0;
  std::size_t gaps = 0;
  std::size_t nonzero = 0;
  double sum_s = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < indicator.size(); ++k) {
    if (!indicator[k]) continue;
    if (exceedances > 0) {
      const std::size_t s = k - last - 1;
      ++gaps;
      if (s > 0) ++nonzero;
      sum_s += static_cast<double>(s);
    }
    last = k;
    ++exceedances;
  }
  if (exceedances == 0) throw NumericalError("suveges_ei: no exceedances");
  if (gaps == 0) {
    est.theta = 1.0;
    est.flagged = true;
    est.note = "single exceedance: no inter-exceedance gaps";
    return est;
  }
  const double a = (1.0 - q) * sum_s;
  if (a == 0.0) {
    est.theta = 0.0;
    est.flagged = true;
    est.note = "all exceedances consecutive";
    return est;
  }
  const double N = static_cast<double>(gaps);
  const double Nc = static_cast<double>(nonzero);
  const double b = a + N + Nc;
  const double disc = std::max(0.0, b * b - 8.0 * Nc * a);
  est.theta = std::clamp((b - std::sqrt(disc)) / (2.0 * a), 0.0, 1.0);
  return est;
}

std::vector<std::pair<std::size_t, double>> waiting_time_epdf(const ClusterStats& stats) {
  if (stats.waiting_times.empty()) throw std::invalid_argument("waiting_time_epdf: no waiting times");
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t w : stats.waiting_times) ++counts[w];
  const double total = static_cast<double>(stats.waiting_times.size());
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(counts.size());
  for (auto [w, c] : counts) out.emplace_back(w, static_cast<double>(c) / total);
  return out;
}

void write_epdf_csv(std::ostream& out, std::span<const std::pair<std::size_t, double>> epdf) {
  out << "waiting_time,probability\n";
  for (const auto& [w, p] : epdf) out << w << ',' << format_double(p) << '\n';
}

ReturnTimeEstimate qk_return_estimator(std::span<const std::uint8_t> in_set, const QkOptions& options) {
  if (options.k_sum > options.k_max) throw std::invalid_argument("qk_return_estimator: k_sum > k_max");
  ReturnTimeEstimate est;
  est.q.assign(options.k_max + 1, 0.0);
  const std::size_t horizon = options.k_max + 1;
  std::size_t eligible = 0;
  std::size_t tail = 0;
  std::vector<std::size_t> hits(options.k_max + 1, 0);

  std::size_t next = 0;  // index of the next visit strictly after k
  const std::size_t len = in_set.size();
  for (std::size_t k = 0; k < len; ++k) {
    if (!in_set[k]) continue;
    if (k + horizon >= len) break;
    ++eligible;
    next = std::max(next, k + 1);
    while (next < len && !in_set[next]) ++next;
    const std::size_t r = next < len ? next - k : std::numeric_limits<std::size_t>::max();
    if (r <= horizon) {
      ++hits[r - 1];
    } else {
      ++tail;
    }
  }
  est.visits = eligible;
  if (eligible < options.min_visits)
    throw NumericalError("qk_return_estimator: insufficient visits (" + std::to_string(eligible) +
                         " observed, " + std::to_string(options.min_visits) + " required)");
  double summed = 0.0;
  for (std::size_t k = 0; k <= options.k_max; ++k) {
    est.q[k] = static_cast<double>(hits[k]) / static_cast<double>(eligible);
    if (k <= options.k_sum) summed += est.q[k];
  }
  est.tail_fraction = static_cast<double>(tail) / static_cast<double>(eligible);
  est.theta = std::clamp(1.0 - summed, 0.0, 1.0);
  return est;
}

std::vector<std::uint8_t> strip_indicator(const Trajectory& trajectory, double accuracy) {
  const auto& k = kernels::active();
  std::vector<std::uint8_t> out(trajectory.length());
  for (std::size_t i = 0; i < trajectory.length(); ++i) out[i] = k.range(trajectory[i]) <= accuracy ? 1 : 0;
  return out;
}

ReturnTimeEstimate qk_return_estimator(const Trajectory& trajectory, double accuracy,
                                       const QkOptions& options) {
  return qk_return_estimator(strip_indicator(trajectory, accuracy), options);
}

double poisson_pmf(double t, std::size_t k) {
  if (!(t >= 0.0)) throw std::invalid_argument("poisson_pmf: t must be >= 0");
  if (t == 0.0) return k == 0 ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  return std::exp(-t + kd * std::log(t) - std::lgamma(kd + 1.0));
}

double compound_poisson_pmf(double t, double p, std::size_t k) {
  if (!(t >= 0.0)) throw std::invalid_argument("compound_poisson_pmf: t must be >= 0");
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("compound_poisson_pmf: p must lie in [0, 1)");
  if (p == 0.0) return poisson_pmf(t, k);
  const double rate = t * (1.0 - p);
  if (k == 0) return std::exp(-rate);
  if (t == 0.0) return 0.0;
  const double kd = static_cast<double>(k);
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_rate = std::log(rate);
  double total = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    const double jd = static_cast<double>(j);
    const double log_choose = std::lgamma(kd) - std::lgamma(jd) - std::lgamma(kd - jd + 1.0);
    total += std::exp(-rate + (kd - jd) * log_p + jd * log_q + jd * log_rate - std::lgamma(jd + 1.0) +
                      log_choose);
  }
  return total;
}

std::size_t count_visits(std::span<const std::uint8_t> in_set, double strip_measure, double t) {
  if (!(strip_measure > 0.0)) throw std::invalid_argument("count_visits: strip measure must be > 0");
  if (!(t >= 0.0)) throw std::invalid_argument("count_visits: t must be >= 0");
  const double h = std::floor(t / strip_measure);
  if (h >= static_cast<double>(in_set.size()))
    throw std::invalid_argument("count_visits: horizon " + format_double(h) +
                                " exceeds trajectory length " + std::to_string(in_set.size()));
  const auto horizon = static_cast<std::size_t>(h);
  std::size_t visits = 0;
  for (std::size_t l = 1; l <= horizon; ++l) visits += in_set[l];
  return visits;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  const std::size_t n = std::max(p.size(), q.size());
  double tv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    tv += std::fabs(a - b);
  }
  return 0.5 * tv;
}

std::string to_json(const EiEstimate& ei, const std::optional<EvtFitResult>& fit) {
  nlohmann::ordered_json j;
  j["method"] = to_string(ei.method);
  j["theta"] = ei.theta;
  if (fit) {
    j["xi"] = fit->xi;
    j["mu"] = fit->mu;
    j["sigma"] = fit->sigma;
  } else {
    j["xi"] = nullptr;
    j["mu"] = nullptr;
    j["sigma"] = nullptr;
  }
  j["n"] = ei.metadata.n;
  j["gamma"] = ei.metadata.gamma;
  j["epsilon"] = ei.metadata.epsilon;
  j["quantile"] = ei.metadata.quantile;
  j["seed"] = ei.metadata.seed;
  j["samples"] = ei.metadata.samples;
  if (ei.uncertainty) j["uncertainty"] = *ei.uncertainty;
  if (ei.flagged) j["flag"] = ei.note;
  return j.dump();
}

}  // namespace cml
