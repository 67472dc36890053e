#pragma once

// Ensemble histograms of the invariant density on [0,1)^n (n = 2, 3) and
// their trace along the diagonal.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cml/lattice.hpp"

namespace cml {

class DensityHistogram {
 public:
  DensityHistogram(std::size_t n, std::size_t bins_per_axis);

  std::size_t n() const { return n_; }
  std::size_t bins_per_axis() const { return bins_; }
  std::size_t cell_count() const { return counts_.size(); }
  std::uint64_t total_samples() const { return total_; }
  std::span<const std::uint64_t> counts() const { return counts_; }

  /// Flat row-major cell index of a point of [0,1)^n.
  std::size_t cell_of(std::span<const double> x) const;
  std::vector<std::size_t> multi_index(std::size_t cell) const;

  void add(std::span<const double> x) {
    ++counts_[cell_of(x)];
    ++total_;
  }
  void add_count(std::size_t cell, std::uint64_t count) {
    counts_[cell] += count;
    total_ += count;
  }

  /// Associative, order-independent merge of another histogram of the same shape.
  void merge(const DensityHistogram& other);

  /// Normalized density of a cell (integrates to 1 over [0,1)^n).
  double density(std::size_t cell) const;
  double cell_volume() const;

 private:
  std::size_t n_;
  std::size_t bins_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct DensityOptions {
  std::size_t realizations = 300;
  std::size_t iterations_each = 10'000'000;
  std::size_t bins = 300;
  std::size_t burn_in = 1000;
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::size_t memory_budget_bytes = std::size_t{1} << 30;
  std::size_t threads = 1;
  /// Realization indices used are offset .. offset + realizations - 1.
  std::size_t realization_offset = 0;
};

/// Each worker accumulates its realizations into a private histogram. Counts
/// are integers, so the merged result does not depend on the thread count.
DensityHistogram estimate_density(const MapSpec& spec, const DensityOptions& options);

struct DiagonalTrace {
  /// Bin centers along one axis.
  std::vector<double> grid;
  std::vector<double> values;
  double band = 0.0;

  /// Piecewise-constant lookup.
  double operator()(double x) const;
};

/// Average normalized density over the cube {max_i |x_i - x| <= band}
/// around each diagonal point (x,..,x), x a bin center; cells are selected
/// by their centers.
DiagonalTrace diagonal_trace(const DensityHistogram& hist, double band);

/// max_x |trace_nu(x) - trace_2nu(x)| / nu; `wide` must use twice the band
/// of `narrow` on the same grid.
double trace_oscillation(const DiagonalTrace& narrow, const DiagonalTrace& wide);

/// CSV `bin_index_1,...,bin_index_n,density`.
void write_density_csv(std::ostream& out, const DensityHistogram& hist);
/// CSV `x,trace_value`.
void write_trace_csv(std::ostream& out, const DiagonalTrace& trace);

}  // namespace cml
