#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cml/density.hpp"
#include "cml/error.hpp"
#include "cml/spectral.hpp"
#include "cml/theory.hpp"

using namespace cml;

namespace {
MapSpec spec2(double gamma) { return MapSpec(LocalMap::affine_mod1(3), 2, gamma); }

UlamOperator build(double gamma, std::size_t k) {
  UlamOptions o;
  o.k = k;
  o.seed = 3;
  return build_ulam(spec2(gamma), o);
}
}  // namespace

TEST_CASE("uncoupled operator spreads each cell evenly over nine cells") {
  const auto op = build(0.0, 6);
  CHECK(op.cells() == 36);
  CHECK(op.sample_count() == 144);
  const auto entries = op.entries();
  CHECK(entries.size() == 36 * 9);
  for (const auto& e : entries) CHECK(e.value == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  // Cell (0, 0) lands in rows/cols 0..2.
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(entries[i].row == 0);
    CHECK(entries[i].col == (i / 3) * 6 + i % 3);
  }
}

TEST_CASE("operator is row stochastic and the uncoupled density is uniform") {
  for (double gamma : {0.0, 0.3, 0.6}) {
    const auto op = build(gamma, 30);
    for (double s : op.row_sums()) REQUIRE(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto op = build(0.0, 30);
  const auto d = invariant_density_ulam(op);
  CHECK(d.residual < 1e-10);
  for (double m : d.mass) REQUIRE(m == doctest::Approx(1.0 / 900.0).epsilon(1e-8));
}

TEST_CASE("invariant density does not depend on the start vector") {
  const auto op = build(0.4, 30);
  const auto a = invariant_density_ulam(op);
  std::vector<double> start(op.cells(), 0.0);
  start[17] = 1.0;
  start[400] = 2.0;
  const auto b = invariant_density_ulam(op, {}, start);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.mass.size(); ++i) diff += std::fabs(a.mass[i] - b.mass[i]);
  CHECK(diff < 1e-9);
}

TEST_CASE("holes") {
  const auto op = build(0.3, 30);
  const PerturbedOperator diag(op, 0.0);
  CHECK(diag.hole_size() == 30);
  const PerturbedOperator full(op, 1.0);
  CHECK(full.hole_size() == 900);
  CHECK(perturbed_leading_eigenvalue(full).rho == 0.0);
  CHECK_THROWS_AS(PerturbedOperator(op, -0.1), std::invalid_argument);
}

TEST_CASE("escape rate grows with the hole") {
  const auto op = build(0.3, 60);
  const auto inv = invariant_density_ulam(op);
  const auto ladder = ei_spectral_ladder(op, inv, {0.1, 0.05, 0.02});
  REQUIRE(ladder.steps.size() == 3);
  CHECK(ladder.steps[0].rho < ladder.steps[1].rho);
  CHECK(ladder.steps[1].rho < ladder.steps[2].rho);
  CHECK(ladder.steps[2].rho < 1.0);
  for (const auto& s : ladder.steps) CHECK(s.mu_strip > 0.0);
  CHECK(ladder.estimate.method == EiMethod::spectral_ulam);
  CHECK(ladder.estimate.theta >= 0.0);
  CHECK(ladder.estimate.theta <= 1.0);
  CHECK_THROWS_AS(ei_spectral_ladder(op, inv, {}), std::invalid_argument);
}

TEST_CASE("spectral extremal index near the flat formula at zero coupling") {
  const auto op = build(0.0, 120);
  const auto inv = invariant_density_ulam(op);
  const auto ladder = ei_spectral_ladder(op, inv, {0.1, 0.05, 0.025});
  CHECK(ladder.estimate.theta == doctest::Approx(2.0 / 3.0).epsilon(0.1));
}

TEST_CASE("spectral gap") {
  for (double gamma : {0.0, 0.3}) {
    const auto op = build(gamma, 30);
    const double lam2 = second_eigenvalue_modulus(op);
    CHECK(lam2 < 1.0 - 1e-3);
    CHECK(lam2 >= 0.0);
  }
}

TEST_CASE("rebinned density matches a simulated histogram") {
  const auto op = build(0.4, 60);
  const auto inv = invariant_density_ulam(op);
  const auto coarse = rebin(inv.mass, 60, 10);
  double total = 0.0;
  for (double m : coarse) total += m;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  DensityOptions o;
  o.realizations = 4;
  o.iterations_each = 250000;
  o.bins = 10;
  o.seed = 12;
  const auto hist = estimate_density(spec2(0.4), o);
  double l1 = 0.0;
  for (std::size_t c = 0; c < 100; ++c) l1 += std::fabs(coarse[c] - hist.density(c) * hist.cell_volume());
  CHECK(l1 < 0.05);
  CHECK_THROWS_AS(rebin(inv.mass, 60, 7), std::invalid_argument);
}

TEST_CASE("validation and output") {
  UlamOptions o;
  o.k = 10;
  CHECK_THROWS_AS(build_ulam(MapSpec(LocalMap::affine_mod1(3), 3, 0.1), o), ConfigError);
  o.k = 5000;
  CHECK_THROWS_AS(build_ulam(spec2(0.1), o), ConfigError);

  const auto op = build(0.0, 3);
  std::ostringstream csv;
  write_operator_csv(csv, op);
  CHECK(csv.str().rfind("row,col,value\n", 0) == 0);
  SpectralEi ei;
  ei.nu = 0.01;
  ei.rho = 0.99;
  const auto js = spectral_json(300, ei);
  CHECK(js.find("\"k\": 300") != std::string::npos);
  CHECK(js.find("\"theta_hat\"") != std::string::npos);
}

TEST_CASE("operator build is deterministic and thread independent") {
  UlamOptions o;
  o.k = 40;
  o.seed = 8;
  const auto a = build_ulam(spec2(0.5), o);
  o.threads = 3;
  const auto b = build_ulam(spec2(0.5), o);
  CHECK(a.transposed().val == b.transposed().val);
  CHECK(a.transposed().col == b.transposed().col);
}
