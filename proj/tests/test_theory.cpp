#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cml/error.hpp"
#include "cml/rng.hpp"
#include "cml/theory.hpp"

using namespace cml;

namespace {
MapSpec spec3(std::size_t n, double gamma) { return MapSpec(LocalMap::affine_mod1(3), n, gamma); }
const auto flat = [](double) { return 1.0; };
}  // namespace

TEST_CASE("flat-trace formula for the tripling map") {
  CHECK(ei_sync_formula(spec3(2, 0.0), flat) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(ei_sync_formula(spec3(2, 0.3), flat) == doctest::Approx(1.0 - 1.0 / (3.0 * 0.7)).epsilon(1e-12));
  CHECK(ei_sync_formula(spec3(3, 0.1), flat) == doctest::Approx(0.86282).epsilon(1e-5));
  CHECK(ei_sync_flat_asymptotic(3, 0.1, 1.0 / 3.0) == doctest::Approx(0.8628).epsilon(1e-4));
  CHECK(1.0 - ei_sync_flat_asymptotic(53, 0.5, 1.0 / 3.0) == doctest::Approx(std::pow(2.0 / 3.0, 52)).epsilon(1e-6));
  for (std::size_t n = 2; n <= 12; ++n)
    for (double g = 0.0; g < 0.66; g += 0.05)
      CHECK(std::fabs(ei_sync_formula(spec3(n, g), flat) - ei_sync_flat_asymptotic(n, g, 1.0 / 3.0)) <= 1e-12);
}

TEST_CASE("non-flat trace weights the branches equally for a uniform slope") {
  const auto bump = [](double x) { return 1.0 + 0.5 * std::sin(6.0 * x); };
  CHECK(ei_sync_formula(spec3(2, 0.2), bump) == doctest::Approx(ei_sync_formula(spec3(2, 0.2), flat)));
  CHECK_THROWS_AS(ei_sync_formula(spec3(2, 0.2), [](double) { return 0.0; }), NumericalError);
}

TEST_CASE("coupling hypothesis is enforced") {
  CHECK_THROWS_AS(ei_sync_formula(spec3(2, 0.7), flat), HypothesisError);
  CHECK_THROWS_AS(ei_sync_flat_asymptotic(2, 0.7, 1.0 / 3.0), HypothesisError);
  CHECK_THROWS_AS(ei_upper_bound_q0(2, 0.7, 1.0 / 3.0, 1, 1), HypothesisError);
}

TEST_CASE("q_0 upper bound") {
  CHECK(ei_upper_bound_q0(3, 0.2, 1.0 / 3.0, 1, 1).value == doctest::Approx(std::pow(1.0 / 2.4, 2)));
  const auto b = ei_upper_bound_q0(2, 0.1, 1.0 / 3.0, 2, 1);
  CHECK(b.value == doctest::Approx(20.0 / 27.0));
  CHECK(b.meaningful);
  CHECK_FALSE(ei_upper_bound_q0(2, 0.5, 1.0 / 3.0, 10, 1).meaningful);
}

TEST_CASE("periodic point extremal index") {
  const std::vector<LatticeState> fixed{LatticeState::diagonal(2, 0.0)};
  CHECK(ei_periodic_point(fixed, spec3(2, 0.0)) == doctest::Approx(1.0 - 1.0 / 9.0));
  CHECK(ei_periodic_point(fixed, spec3(2, 0.1)) == doctest::Approx(1.0 - 1.0 / 8.1));
  double prev = 0.0;
  for (std::size_t n : {2, 5, 10}) {
    const std::vector<LatticeState> z{LatticeState::diagonal(n, 0.0)};
    const double th = ei_periodic_point(z, spec3(n, 0.1));
    CHECK(th > prev);
    CHECK(th < 1.0);
    prev = th;
  }
  const std::vector<LatticeState> z30{LatticeState::diagonal(30, 0.0)};
  CHECK(ei_periodic_point(z30, spec3(30, 0.1)) > 1.0 - 1e-6);

  // Period two on the diagonal: 1/4 <-> 3/4.
  const std::vector<LatticeState> two{LatticeState::diagonal(2, 0.25), LatticeState::diagonal(2, 0.75)};
  CHECK(ei_periodic_point(two, spec3(2, 0.0)) == doctest::Approx(1.0 - 1.0 / 81.0));

  const std::vector<LatticeState> bad{LatticeState::diagonal(2, 0.1)};
  CHECK_THROWS_AS(ei_periodic_point(bad, spec3(2, 0.0)), NumericalError);
}

TEST_CASE("hitting probabilities") {
  CHECK(first_sync_probability(8100, 0.01, 3, 0.86) == doctest::Approx(0.498).epsilon(2e-3));
  CHECK(first_sync_probability(0, 0.01, 3, 0.86) == 1.0);
  CHECK(first_sync_probability(500, 0.01, 3, 0.0) == 1.0);
  CHECK(first_localization_probability(100, 0.1, 2) == doctest::Approx(std::exp(-1.0)));
  CHECK(first_localization_probability(0, 0.1, 2) == 1.0);
  for (double m : {1.0, 10.0, 1e3, 1e6})
    for (std::size_t n : {2, 3, 6}) {
      const double loc = first_localization_probability(m, 0.05, n);
      const double sync = first_sync_probability(m, 0.05, n, 1.0);
      CHECK(loc >= sync);
      CHECK(sync >= 0.0);
      CHECK(loc <= 1.0);
      CHECK(sync_by_probability(m, 0.05, n, 0.7) + first_sync_probability(m, 0.05, n, 0.7) == doctest::Approx(1.0));
    }
}

TEST_CASE("iterations needed to synchronize") {
  const auto m = iterations_for_sync(0.5, 0.01, 3, 0.86);
  REQUIRE(m.exact);
  CHECK(*m.exact >= 7500);
  CHECK(*m.exact <= 8500);
  CHECK(sync_by_probability(static_cast<double>(*m.exact), 0.01, 3, 0.86) >= 0.5);
  CHECK(sync_by_probability(static_cast<double>(*m.exact - 1), 0.01, 3, 0.86) < 0.5);
  const auto huge = iterations_for_sync(0.5, 0.01, 100, 1.0);
  CHECK(huge.log10_m >= 195);
  CHECK(huge.log10_m <= 205);
  CHECK_FALSE(huge.exact);
  CHECK(iterations_for_sync(1e-12, 0.01, 3, 0.86).log10_m < 0.0);
  CHECK_THROWS_AS(iterations_for_sync(0.5, 0.01, 3, 0.0), std::invalid_argument);
}

TEST_CASE("measure ratio against Monte Carlo volumes") {
  CHECK(leb_ratio(5, 0.0) == 1.0);
  CHECK(leb_ratio(2, 0.5) == doctest::Approx(2.0));
  CHECK(leb_ratio(3, 0.3) == doctest::Approx(1.0 / 0.49));
  // Points whose image under the coupling lies in the strip of width m, versus
  // points in that strip. Only points with mean in [0.2, 0.8] are counted so
  // that neither set is clipped by the faces of the cube.
  const double width = 0.1;
  for (std::size_t n : {2, 3}) {
    for (double gamma : {0.3, 0.5}) {
      Rng rng(derive_seed({n, static_cast<std::uint64_t>(gamma * 100)}));
      const auto c = coupling_matrix(n, gamma);
      std::size_t in_plain = 0, in_coupled = 0;
      std::vector<double> x(n), y(n);
      for (int s = 0; s < 2000000; ++s) {
        double mean = 0.0;
        for (auto& v : x) mean += (v = rng.uniform());
        mean /= static_cast<double>(n);
        if (mean < 0.2 || mean > 0.8) continue;
        for (std::size_t i = 0; i < n; ++i) {
          y[i] = 0.0;
          for (std::size_t j = 0; j < n; ++j) y[i] += c[i * n + j] * x[j];
        }
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
        in_plain += (*hi - *lo <= width);
        in_coupled += (*yhi - *ylo <= width);
      }
      const double ratio = static_cast<double>(in_coupled) / static_cast<double>(in_plain);
      CHECK(ratio == doctest::Approx(leb_ratio(n, gamma)).epsilon(0.02));
    }
  }
}

TEST_CASE("strip measure") {
  CHECK(strip_measure_upper_bound(2, 0.05) == doctest::Approx(0.1));
  CHECK(strip_measure_upper_bound(2, 0.5) == doctest::Approx(1.0));
  CHECK(strip_measure_upper_bound(3, 0.01) == doctest::Approx(4e-4));
  CHECK(strip_measure_exact(2, 0.05) == doctest::Approx(0.0975));
  Rng rng(99);
  for (std::size_t n : {2, 3}) {
    const double nu = n == 2 ? 0.05 : 0.1;
    std::size_t hits = 0;
    const int samples = 1000000;
    std::vector<double> x(n);
    for (int s = 0; s < samples; ++s) {
      for (auto& v : x) v = rng.uniform();
      const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
      hits += (*hi - *lo <= nu);
    }
    const double mc = static_cast<double>(hits) / samples;
    CHECK(mc == doctest::Approx(strip_measure_exact(n, nu)).epsilon(0.02));
    CHECK(mc <= strip_measure_upper_bound(n, nu));
  }
}
