// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "cml/config.hpp"
#include "cml/density.hpp"
#include "cml/evt.hpp"
#include "cml/experiment.hpp"
#include "cml/io.hpp"
#include "cml/lattice.hpp"
#include "cml/observables.hpp"
#include "cml/rng.hpp"
#include "cml/spectral.hpp"
#include "cml/theory.hpp"

using namespace cml;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<double> steps(double lo, double hi, double h) {
  std::vector<double> v;
  for (int i = 0; lo + i * h <= hi + 1e-9; ++i) v.push_back(std::round((lo + i * h) * 1e12) / 1e12);
  return v;
}

std::vector<std::size_t> sizes(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> v;
  for (std::size_t n = lo; n <= hi; ++n) v.push_back(n);
  return v;
}

ExperimentConfig sweep_config(std::vector<std::size_t> n, std::vector<double> gamma, const std::string& observable,
                              std::vector<double> noise = {0.0}) {
  ExperimentConfig c;
  c.n = std::move(n);
  c.gamma = std::move(gamma);
  c.noise = std::move(noise);
  c.observable = observable;
  c.length = 10000;
  c.realizations = 10;
  c.seed = 2024;
  c.threads = worker_count();
  return c;
}

// Mean rows keyed by (n, gamma, epsilon).
using Key = std::tuple<std::size_t, double, double>;
std::map<Key, SweepRow> means(const SweepTable& t) {
  std::map<Key, SweepRow> out;
  for (const auto& r : t.rows)
    if (r.kind == "mean") out[{r.n, r.gamma, r.epsilon}] = r;
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

Outcome theta_curve(std::size_t n) {
  const auto table = run_ei_sweep(sweep_config({n}, steps(0.0, 0.6, 0.1), "global"));
  double worst = 0.0;
  std::string where;
  for (const auto& [key, row] : means(table)) {
    const double g = std::get<1>(key);
    const double expected = n == 2 ? 1.0 - 1.0 / (3.0 * (1.0 - g)) : 1.0 - 1.0 / (9.0 * (1.0 - g) * (1.0 - g));
    const double err = std::fabs(row.theta_suveges - expected);
    if (!(err <= worst)) {
      worst = err;
      where = "gamma=" + fmt(g) + " theta=" + fmt(row.theta_suveges) + " theory=" + fmt(expected);
    }
  }
  return {worst <= 0.07, "max |err| " + fmt(worst) + " at " + where};
}

Outcome c3() {
  const double lambda = 1.0 / 3.0;
  const auto table = run_ei_sweep(sweep_config(sizes(3, 23), steps(0.0, 0.6, 0.1), "global"));
  std::size_t good = 0, total = 0;
  double worst = 0.0;
  for (const auto& [key, row] : means(table)) {
    const auto [n, g, e] = key;
    const double expected = 1.0 - std::pow(lambda / (1.0 - g), static_cast<double>(n - 1));
    const double err = std::fabs(row.theta_suveges - expected);
    worst = std::max(worst, std::isfinite(err) ? err : 1.0);
    good += err <= 0.1;
    ++total;
  }
  const double share = static_cast<double>(good) / static_cast<double>(total);
  return {share >= 0.9, std::to_string(good) + "/" + std::to_string(total) + " points within 0.1, worst " + fmt(worst)};
}

Outcome c4() {
  auto c = sweep_config(sizes(3, 23), steps(0.0, 0.6, 0.1), "global");
  std::size_t bad = 0, total = 0;
  double worst_small = 0.0, worst_large = 0.0;
  for (const char* obs : {"global", "local"}) {
    c.observable = obs;
    for (const auto& [key, row] : means(run_ei_sweep(c))) {
      const auto [n, g, e] = key;
      const bool small = n <= 10 && g <= 0.4 + 1e-9;
      const double xi = std::isfinite(row.xi_gpd) ? std::fabs(row.xi_gpd) : 1.0;
      (small ? worst_small : worst_large) = std::max(small ? worst_small : worst_large, xi);
      bad += xi > (small ? 0.1 : 0.15);
      ++total;
    }
  }
  return {bad == 0, "mean |xi| worst " + fmt(worst_small) + " (n<=10, gamma<=0.4), " + fmt(worst_large) +
                        " elsewhere; " + std::to_string(bad) + "/" + std::to_string(total) + " outside tolerance"};
}

Outcome c5() {
  const auto gammas = steps(0.0, 0.6, 0.1);
  const auto rows = means(run_ei_sweep(sweep_config(sizes(3, 23), gammas, "local")));
  double worst_spread = 0.0, worst_track = 0.0;
  for (double g : gammas) {
    double lo = 1.0, hi = 0.0;
    for (std::size_t n = 3; n <= 23; ++n) {
      const double th = rows.at({n, g, 0.0}).theta_suveges;
      lo = std::min(lo, th);
      hi = std::max(hi, th);
      worst_track = std::max(worst_track, std::fabs(th - (1.0 - 1.0 / (3.0 * (1.0 - g)))));
    }
    worst_spread = std::max(worst_spread, hi - lo);
  }
  return {worst_spread <= 0.1 && worst_track <= 0.1,
          "spread across n " + fmt(worst_spread) + ", max |theta - theta_2| " + fmt(worst_track)};
}

Outcome c6() {
  const auto gammas = steps(0.0, 0.6, 0.1);
  double min_noisy = 1.0, worst_low = 0.0;
  std::string where;
  for (const char* obs : {"global", "local"}) {
    const auto rows = means(run_ei_sweep(sweep_config(sizes(3, 23), gammas, obs, {0.0, 1e-4, 1e-2})));
    for (std::size_t n = 3; n <= 23; ++n)
      for (double g : gammas) {
        const double det = rows.at({n, g, 0.0}).theta_suveges;
        const double low = rows.at({n, g, 1e-4}).theta_suveges;
        const double high = rows.at({n, g, 1e-2}).theta_suveges;
        if (high < min_noisy) {
          min_noisy = high;
          where = std::string(obs) + " n=" + std::to_string(n) + " gamma=" + fmt(g);
        }
        worst_low = std::max(worst_low, std::fabs(low - det));
      }
  }
  return {min_noisy >= 0.9 && worst_low <= 0.1, "min theta at eps=1e-2 " + fmt(min_noisy) + " (" + where +
                                                    "), max |theta(1e-4) - theta(0)| " + fmt(worst_low)};
}

Outcome c7() {
  const auto a = iterations_for_sync(0.5, 0.01, 3, 0.86);
  const auto b = iterations_for_sync(0.5, 0.01, 100, 1.0);
  const bool ok = a.exact && *a.exact >= 7500 && *a.exact <= 8500 && b.log10_m >= 195 && b.log10_m <= 205;
  return {ok, "m = " + std::to_string(a.exact.value_or(0)) + ", log10 m = " + fmt(b.log10_m)};
}

Outcome c8() {
  const double p = poisson_pmf(5.0, 5);
  return {std::fabs(p - 0.17547) <= 1e-5, "pmf(5, 5) = " + format_double(p)};
}

Outcome c9() {
  ExperimentConfig c = sweep_config({2}, {0.1, 0.3, 0.5}, "global");
  const auto empirical = means(run_ei_sweep(c));
  double worst = 0.0;
  std::string detail;
  for (double g : c.gamma) {
    const MapSpec spec(LocalMap::affine_mod1(3), 2, g);
    UlamOptions uo;
    uo.k = 900;
    uo.seed = c.seed;
    uo.threads = c.threads;
    const auto op = build_ulam(spec, uo);
    const auto inv = invariant_density_ulam(op);
    const double spectral = ei_spectral_ladder(op, inv, {0.04, 0.02, 0.01}).estimate.theta;

    DensityOptions d;
    d.realizations = 300;
    d.iterations_each = 10000;
    d.bins = 100;
    d.seed = c.seed;
    d.threads = c.threads;
    const auto trace = diagonal_trace(estimate_density(spec, d), 0.02);
    const double formula = ei_sync_formula(spec, [&](double x) { return trace(x); });

    const double suveges = empirical.at({2, g, 0.0}).theta_suveges;
    const double spread = std::max({spectral, formula, suveges}) - std::min({spectral, formula, suveges});
    worst = std::max(worst, spread);
    detail += "gamma=" + fmt(g) + " [" + fmt(spectral) + " " + fmt(formula) + " " + fmt(suveges) + "] ";
  }
  return {worst <= 0.07, detail + "max spread " + fmt(worst)};
}

Outcome c10() {
  double worst = 0.0;
  for (std::size_t n = 2; n <= 8; ++n)
    for (double g : steps(0.0, 0.95, 0.05)) {
      const auto c = coupling_matrix(n, g);
      Eigen::MatrixXd m(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = c[i * n + j];
      worst = std::max(worst, std::fabs(coupling_det(n, g) - m.determinant()));
    }
  return {worst <= 1e-10, "max |difference| " + format_double(worst)};
}

Outcome c11() {
  double norm = 0.0, reduce = 0.0;
  for (double t : {0.5, 1.0, 5.0, 20.0})
    for (double p : steps(0.0, 0.9, 0.1)) {
      double total = 0.0;
      for (std::size_t k = 0; k < 2000; ++k) total += compound_poisson_pmf(t, p, k);
      norm = std::max(norm, std::fabs(total - 1.0));
    }
  for (double t : {0.5, 1.0, 5.0, 20.0})
    for (std::size_t k = 0; k < 100; ++k)
      reduce = std::max(reduce, std::fabs(compound_poisson_pmf(t, 0.0, k) - poisson_pmf(t, k)));
  return {norm <= 1e-10 && reduce <= 1e-14,
          "normalization error " + format_double(norm) + ", p=0 difference " + format_double(reduce)};
}

Outcome c12() {
  constexpr int cases = 10000;
  Rng rng(derive_seed({12}));
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
  };
  std::size_t failures = 0;
  const auto T = LocalMap::affine_mod1(3);
  for (int i = 0; i < cases; ++i) {
    const std::size_t n = pick(2, 40);
    const double c = rng.uniform();
    const auto y = step(LatticeState::diagonal(n, c), MapSpec(T, n, rng.uniform() * 0.99));
    for (std::size_t k = 0; k < n; ++k) failures += std::fabs(y[k] - T(c)) > 1e-12;
  }
  for (int i = 0; i < cases; ++i) {
    const std::size_t len = pick(2, 60);
    std::vector<double> s(len), e(len);
    for (std::size_t k = 0; k < len; ++k) e[k] = std::exp(s[k] = rng.uniform() * 10.0 - 5.0);
    const double u = rng.uniform() * 10.0 - 5.0;
    failures += exceedance_indicator(s, u) != exceedance_indicator(e, std::exp(u));
  }
  for (int i = 0; i < cases; ++i) {
    std::vector<double> s(pick(1, 60));
    for (auto& v : s) v = rng.uniform();
    const auto m = running_maximum(s);
    failures += running_maximum(m) != m;
  }
  for (int i = 0; i < cases; ++i) {
    const std::size_t n = pick(2, 3);
    DensityHistogram a(n, pick(1, 6)), b(n, a.bins_per_axis());
    const std::size_t adds = pick(1, 20);
    std::vector<double> x(n);
    for (std::size_t k = 0; k < adds; ++k) {
      for (auto& v : x) v = rng.uniform();
      (k % 2 ? a : b).add(x);
    }
    a.merge(b);
    double mass = 0.0;
    for (std::size_t c = 0; c < a.cell_count(); ++c) mass += a.density(c) * a.cell_volume();
    failures += a.total_samples() != adds || std::fabs(mass - 1.0) > 1e-12;
  }
  for (int i = 0; i < cases; ++i) {
    ExperimentConfig c;
    c.n = {pick(2, 30), pick(2, 30)};
    c.gamma = {rng.uniform() * 0.66};
    c.noise = {rng.uniform() * 0.01};
    c.quantile = 0.5 + 0.49 * rng.uniform();
    c.seed = rng.next();
    c.threads = pick(1, 16);
    const auto text = to_text(c);
    failures += to_text(parse_config(text)) != text;
  }
  // Replaying a manifest reproduces the data files byte for byte.
  const auto base = fs::temp_directory_path() / "cml_acceptance_manifest";
  fs::remove_all(base);
  auto c = sweep_config({2, 3}, {0.2, 0.5}, "global");
  c.realizations = 2;
  c.threads = 1;
  const auto a = base / "a", b = base / "b";
  write_manifest(a, "ei-sweep", c, write_sweep_outputs(a, run_ei_sweep(c)));
  auto replay = load_config(a / "manifest.json");
  replay.threads = worker_count() + 1;
  write_manifest(b, "ei-sweep", replay, write_sweep_outputs(b, run_ei_sweep(replay)));
  for (const char* f : {"ei_sweep.csv", "manifest.json"}) failures += read_text_file(a / f) != read_text_file(b / f);
  fs::remove_all(base);
  return {failures == 0, std::to_string(failures) + " failing cases over 5 x 10^4 randomized inputs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"C1 theta_2 curve", [] { return theta_curve(2); }},
      {"C2 theta_3 curve", [] { return theta_curve(3); }},
      {"C3 asymptotic EI surface", c3},
      {"C4 GPD shape near zero", c4},
      {"C5 local sync independent of n", c5},
      {"C6 noise destroys clusters", c6},
      {"C7 synchronization time calculators", c7},
      {"C8 Poisson pmf", c8},
      {"C9 spectral / formula / empirical agreement", c9},
      {"C10 coupling determinant", c10},
      {"C11 compound Poisson properties", c11},
      {"C12 property suites", c12},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
