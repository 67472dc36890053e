#include "cml/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "cml/error.hpp"
#include "cml/io.hpp"
#include "cml/kernels.hpp"

namespace cml {

BlockSet::BlockSet(std::vector<IndexBlock> blocks, std::size_t n) : blocks_(std::move(blocks)), n_(n) {
  if (blocks_.empty()) throw std::invalid_argument("BlockSet: no blocks");
  std::vector<IndexBlock> sorted = blocks_;
  std::sort(sorted.begin(), sorted.end(),
            [](const IndexBlock& a, const IndexBlock& b) { return a.first < b.first; });
  for (std::size_t b = 0; b < sorted.size(); ++b) {
    const auto& blk = sorted[b];
    if (blk.last < blk.first || blk.last - blk.first + 1 < 2)
      throw std::invalid_argument("BlockSet: every block needs at least two sites");
    if (blk.last >= n) throw std::invalid_argument("BlockSet: block index beyond lattice size");
    if (b > 0 && sorted[b - 1].last >= blk.first)
      throw std::invalid_argument("BlockSet: blocks overlap");
  }
}

std::string observable_name(const ObservableSpec& spec) {
  struct Visitor {
    std::string operator()(const Localization&) const { return "localization"; }
    std::string operator()(const GlobalSync&) const { return "global_sync"; }
    std::string operator()(const LocalSync& s) const {
      return s.boundary == Boundary::ring ? "local_sync_ring" : "local_sync";
    }
    std::string operator()(const BlockSync&) const { return "block_sync"; }
  };
  return std::visit(Visitor{}, spec);
}

double eval_localization(std::span<const double> x, std::span<const double> z) {
  if (x.size() != z.size()) throw std::invalid_argument("localization target size mismatch");
  return -std::log(kernels::active().l1_distance(x, z));
}

double eval_global_sync(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("global sync needs n >= 2");
  return -std::log(kernels::active().range(x));
}

double eval_local_sync(std::span<const double> x, Boundary boundary) {
  if (x.size() < 2) throw std::invalid_argument("local sync needs n >= 2");
  return -std::log(kernels::active().max_adjacent_gap(x, boundary == Boundary::ring));
}

double eval_block_sync(std::span<const double> x, const BlockSet& blocks) {
  if (x.size() != blocks.n()) throw std::invalid_argument("block set built for another lattice size");
  const auto& k = kernels::active();
  double gap = 0.0;
  for (const auto& b : blocks.blocks()) gap = std::max(gap, k.range(x.subspan(b.first, b.last - b.first + 1)));
  return -std::log(gap);
}

double evaluate(const ObservableSpec& spec, std::span<const double> x) {
  struct Visitor {
    std::span<const double> x;
    double operator()(const Localization& s) const { return eval_localization(x, s.target.components()); }
    double operator()(const GlobalSync&) const { return eval_global_sync(x); }
    double operator()(const LocalSync& s) const { return eval_local_sync(x, s.boundary); }
    double operator()(const BlockSync& s) const { return eval_block_sync(x, s.blocks); }
  };
  return std::visit(Visitor{x}, spec);
}

ObservableSeries observe(const Trajectory& trajectory, const ObservableSpec& spec,
                         std::uint64_t seed, double noise) {
  ObservableSeries series{std::vector<double>(trajectory.length()), spec, seed, noise};
  for (std::size_t k = 0; k < trajectory.length(); ++k) series.values[k] = evaluate(spec, trajectory[k]);
  return series;
}

std::vector<double> running_maximum(std::span<const double> series) {
  if (series.empty()) throw std::invalid_argument("running_maximum: empty series");
  std::vector<double> out(series.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < series.size(); ++k) out[k] = m = std::max(m, series[k]);
  return out;
}

double threshold_from_quantile(std::span<const double> series, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
  std::vector<double> finite;
  finite.reserve(series.size());
  for (double v : series)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) throw NumericalError("threshold_from_quantile: no finite values");
  const double h = static_cast<double>(finite.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double w = h - static_cast<double>(lo);
  std::nth_element(finite.begin(), finite.begin() + lo, finite.end());
  const double a = finite[lo];
  if (lo + 1 >= finite.size() || w == 0.0) return a;
  const double b = *std::min_element(finite.begin() + lo + 1, finite.end());
  return a + w * (b - a);
}

std::vector<std::uint8_t> exceedance_indicator(std::span<const double> series, double threshold) {
  std::vector<std::uint8_t> out(series.size());
  for (std::size_t k = 0; k < series.size(); ++k) out[k] = series[k] > threshold ? 1 : 0;
  return out;
}

void write_series_csv(std::ostream& out, std::span<const double> values) {
  out << "step,value\n";
  for (std::size_t k = 0; k < values.size(); ++k) out << k << ',' << format_double(values[k]) << '\n';
}

}  // namespace cml
