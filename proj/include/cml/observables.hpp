#pragma once

// Scalar observables whose large values mark localization near a target
// configuration or (global, nearest-neighbour, block) synchronization.
// All return +inf when the corresponding distance is exactly zero.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cml/lattice.hpp"

namespace cml {

enum class Boundary { chain, ring };

/// Inclusive 0-based index range [first, last].
struct IndexBlock {
  std::size_t first;
  std::size_t last;
};

/// Disjoint blocks, each with at least two sites.
class BlockSet {
 public:
  BlockSet(std::vector<IndexBlock> blocks, std::size_t n);
  std::span<const IndexBlock> blocks() const { return blocks_; }
  std::size_t n() const { return n_; }

 private:
  std::vector<IndexBlock> blocks_;
  std::size_t n_;
};

struct Localization {
  LatticeState target;
};
struct GlobalSync {};
struct LocalSync {
  Boundary boundary = Boundary::chain;
};
struct BlockSync {
  BlockSet blocks;
};

using ObservableSpec = std::variant<Localization, GlobalSync, LocalSync, BlockSync>;

std::string observable_name(const ObservableSpec& spec);

/// -log sum_i |x_i - z_i|.
double eval_localization(std::span<const double> x, std::span<const double> z);
/// -log max_{i != j} |x_i - x_j|.
double eval_global_sync(std::span<const double> x);
/// -log max over nearest-neighbour pairs.
double eval_local_sync(std::span<const double> x, Boundary boundary = Boundary::chain);
/// -log of the largest gap within any block; sites outside blocks ignored.
double eval_block_sync(std::span<const double> x, const BlockSet& blocks);

double evaluate(const ObservableSpec& spec, std::span<const double> x);

struct ObservableSeries {
  std::vector<double> values;
  ObservableSpec spec;
  std::uint64_t seed = 0;
  double noise = 0.0;
};

ObservableSeries observe(const Trajectory& trajectory, const ObservableSpec& spec,
                         std::uint64_t seed = 0, double noise = 0.0);

/// M_k = max(X_0..X_k).
std::vector<double> running_maximum(std::span<const double> series);

/// Empirical q-quantile of the finite values, by linear interpolation
/// between order statistics: h = (N - 1) q, Q = x_(floor h) + frac(h) *
/// (x_(floor h + 1) - x_(floor h)) with 0-based sorted x.
double threshold_from_quantile(std::span<const double> series, double q);

inline constexpr const char* kQuantileConvention = "linear interpolation, h=(N-1)q (Hyndman-Fan 7)";

/// 1 where value > threshold; +inf always counts.
std::vector<std::uint8_t> exceedance_indicator(std::span<const double> series, double threshold);

/// CSV `step,value` with the literal `inf` for infinities.
void write_series_csv(std::ostream& out, std::span<const double> values);

}  // namespace cml
