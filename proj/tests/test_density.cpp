#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cml/density.hpp"
#include "cml/theory.hpp"

using namespace cml;

namespace {
MapSpec spec3(std::size_t n, double gamma) { return MapSpec(LocalMap::affine_mod1(3), n, gamma); }

DensityOptions small_run(std::size_t bins, std::size_t threads) {
  DensityOptions o;
  o.realizations = 8;
  o.iterations_each = 20000;
  o.bins = bins;
  o.burn_in = 100;
  o.seed = 4;
  o.threads = threads;
  return o;
}
}  // namespace

TEST_CASE("histogram indexing and mass") {
  DensityHistogram h(2, 4);
  CHECK(h.cell_count() == 16);
  CHECK(h.cell_of(std::vector<double>{0.3, 0.9}) == 1 * 4 + 3);
  CHECK(h.multi_index(7) == std::vector<std::size_t>{1, 3});
  h.add(std::vector<double>{0.3, 0.9});
  h.add(std::vector<double>{0.0, 0.0});
  double mass = 0.0;
  for (std::size_t c = 0; c < h.cell_count(); ++c) mass += h.density(c) * h.cell_volume();
  CHECK(mass == doctest::Approx(1.0));
  DensityHistogram other(2, 4);
  other.add_count(3, 5);
  h.merge(other);
  CHECK(h.total_samples() == 7);
  CHECK(h.counts()[3] == 5);
  CHECK_THROWS_AS(h.merge(DensityHistogram(2, 5)), std::invalid_argument);
  CHECK_THROWS_AS(DensityHistogram(4, 10), std::invalid_argument);
}

TEST_CASE("estimated density integrates to one and is flat without coupling") {
  const auto h = estimate_density(spec3(2, 0.0), small_run(10, 1));
  CHECK(h.total_samples() == 8 * 20000);
  double mass = 0.0, worst = 0.0;
  for (std::size_t c = 0; c < h.cell_count(); ++c) {
    mass += h.density(c) * h.cell_volume();
    worst = std::max(worst, std::fabs(h.density(c) - 1.0));
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(worst < 0.1);
}

TEST_CASE("density does not depend on the thread count") {
  const auto a = estimate_density(spec3(2, 0.4), small_run(20, 1));
  const auto b = estimate_density(spec3(2, 0.4), small_run(20, 3));
  REQUIRE(a.cell_count() == b.cell_count());
  for (std::size_t c = 0; c < a.cell_count(); ++c) REQUIRE(a.counts()[c] == b.counts()[c]);
  CHECK(a.total_samples() == b.total_samples());
}

TEST_CASE("merging realization groups equals one run") {
  auto opt = small_run(10, 1);
  opt.realizations = 4;
  auto first = estimate_density(spec3(2, 0.3), opt);
  opt.realization_offset = 4;
  first.merge(estimate_density(spec3(2, 0.3), opt));
  const auto whole = estimate_density(spec3(2, 0.3), small_run(10, 1));
  for (std::size_t c = 0; c < whole.cell_count(); ++c) REQUIRE(first.counts()[c] == whole.counts()[c]);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(estimate_density(spec3(4, 0.1), small_run(10, 1)), std::invalid_argument);
  auto opt = small_run(2000, 1);
  opt.memory_budget_bytes = 1 << 20;
  CHECK_THROWS_AS(estimate_density(spec3(3, 0.1), opt), std::invalid_argument);
}

TEST_CASE("diagonal trace") {
  DensityHistogram h(2, 10);
  for (std::size_t a = 0; a < 10; ++a)
    for (std::size_t b = 0; b < 10; ++b) h.add_count(a * 10 + b, a == b ? 3 : 1);
  const auto narrow = diagonal_trace(h, 0.1);
  REQUIRE(narrow.values.size() == 10);
  CHECK(narrow.grid[0] == doctest::Approx(0.05));
  // Normalization: 100 + 20 = 120 samples over 100 cells.
  const double unit = 100.0 / 120.0;
  // Interior: 3x3 block with three diagonal cells.
  CHECK(narrow.values[5] == doctest::Approx(unit * (3 * 3 + 6) / 9.0));
  // Corner block is clipped to 2x2.
  CHECK(narrow.values[0] == doctest::Approx(unit * (2 * 3 + 2) / 4.0));
  CHECK(narrow(0.55) == narrow.values[5]);
  CHECK_THROWS_AS(diagonal_trace(h, 0.05), std::invalid_argument);

  const auto wide = diagonal_trace(h, 0.2);
  CHECK(trace_oscillation(narrow, wide) >= 0.0);
  CHECK_THROWS_AS(trace_oscillation(narrow, diagonal_trace(h, 0.3)), std::invalid_argument);
}

TEST_CASE("empirical trace fed to the formula reproduces the flat value at zero coupling") {
  auto opt = small_run(20, 1);
  opt.iterations_each = 50000;
  const auto h = estimate_density(spec3(2, 0.0), opt);
  const auto tr = diagonal_trace(h, 0.05);
  CHECK(ei_sync_formula(spec3(2, 0.0), [&](double x) { return tr(x); }) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("CSV writers") {
  DensityHistogram h(2, 2);
  h.add_count(1, 4);
  std::ostringstream out;
  write_density_csv(out, h);
  CHECK(out.str() == "bin_index_1,bin_index_2,density\n0,0,0\n0,1,4\n1,0,0\n1,1,0\n");
  std::ostringstream tr;
  write_trace_csv(tr, diagonal_trace(h, 0.5));
  CHECK(tr.str().rfind("x,trace_value\n", 0) == 0);
}
