#include "cml/density.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "cml/error.hpp"
#include "cml/io.hpp"
#include "cml/parallel.hpp"

namespace cml {

DensityHistogram::DensityHistogram(std::size_t n, std::size_t bins_per_axis) : n_(n), bins_(bins_per_axis) {
  if (n < 1 || n > 3) throw std::invalid_argument("DensityHistogram: dimension must be 1, 2 or 3");
  if (bins_ == 0) throw std::invalid_argument("DensityHistogram: need at least one bin");
  std::size_t cells = 1;
  for (std::size_t i = 0; i < n; ++i) cells *= bins_;
  counts_.assign(cells, 0);
}

std::size_t DensityHistogram::cell_of(std::span<const double> x) const {
  std::size_t cell = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    auto b = static_cast<std::size_t>(x[i] * static_cast<double>(bins_));
    cell = cell * bins_ + std::min(b, bins_ - 1);
  }
  return cell;
}

std::vector<std::size_t> DensityHistogram::multi_index(std::size_t cell) const {
  std::vector<std::size_t> idx(n_);
  for (std::size_t i = n_; i-- > 0;) {
    idx[i] = cell % bins_;
    cell /= bins_;
  }
  return idx;
}

void DensityHistogram::merge(const DensityHistogram& other) {
  if (other.n_ != n_ || other.bins_ != bins_) throw std::invalid_argument("merge: histogram shapes differ");
  for (std::size_t c = 0; c < counts_.size(); ++c) counts_[c] += other.counts_[c];
  total_ += other.total_;
}

double DensityHistogram::cell_volume() const { return 1.0 / static_cast<double>(counts_.size()); }

double DensityHistogram::density(std::size_t cell) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(counts_[cell]) / (static_cast<double>(total_) * cell_volume());
}

DensityHistogram estimate_density(const MapSpec& spec, const DensityOptions& options) {
  if (spec.n < 2 || spec.n > 3) throw std::invalid_argument("estimate_density: lattice size must be 2 or 3");
  std::size_t cells = 1;
  for (std::size_t i = 0; i < spec.n; ++i) cells *= options.bins;
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, options.realizations));
  const double bytes = static_cast<double>(cells) * sizeof(std::uint64_t) * static_cast<double>(workers + 1);
  if (bytes > static_cast<double>(options.memory_budget_bytes))
    throw std::invalid_argument("estimate_density: " + std::to_string(cells) + " cells x " +
                                std::to_string(workers + 1) + " histograms exceed the memory budget");

  std::vector<DensityHistogram> partial(workers, DensityHistogram(spec.n, options.bins));
  // Realization r goes to worker r % workers; counts are integers, so the
  // merged result is independent of scheduling.
  parallel_for(workers, workers, [&](std::size_t w) {
    for (std::size_t r = w; r < options.realizations; r += workers) {
      TrajectoryConfig cfg{spec};
      cfg.noise.intensity = options.noise;
      cfg.seed = options.seed;
      cfg.realization = options.realization_offset + r;
      Simulator sim(cfg);
      sim.advance(options.burn_in);
      for (std::size_t k = 0; k < options.iterations_each; ++k) {
        sim.advance();
        partial[w].add(sim.current());
      }
    }
  });
  DensityHistogram out(spec.n, options.bins);
  for (const auto& p : partial) out.merge(p);
  return out;
}

double DiagonalTrace::operator()(double x) const {
  if (grid.empty()) return 0.0;
  const double w = 1.0 / static_cast<double>(grid.size());
  auto b = static_cast<std::size_t>(std::max(0.0, x) / w);
  return values[std::min(b, values.size() - 1)];
}

DiagonalTrace diagonal_trace(const DensityHistogram& hist, double band) {
  const std::size_t bins = hist.bins_per_axis();
  const double width = 1.0 / static_cast<double>(bins);
  if (band < width * (1.0 - 1e-12)) throw std::invalid_argument("diagonal_trace: band narrower than one bin");
  const auto radius = static_cast<std::ptrdiff_t>(std::floor(band / width + 1e-9));
  const std::size_t n = hist.n();

  DiagonalTrace trace;
  trace.band = band;
  trace.grid.resize(bins);
  trace.values.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    trace.grid[b] = (static_cast<double>(b) + 0.5) * width;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(b) - radius);
    const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(bins) - 1,
                                             static_cast<std::ptrdiff_t>(b) + radius);
    const auto span = static_cast<std::size_t>(hi - lo + 1);
    std::size_t cube = 1;
    for (std::size_t i = 0; i < n; ++i) cube *= span;
    if (cube == 0) throw NumericalError("diagonal_trace: empty tube");
    double sum = 0.0;
    for (std::size_t c = 0; c < cube; ++c) {
      std::size_t rem = c;
      std::size_t cell = 0;
      for (std::size_t i = 0; i < n; ++i) {
        cell = cell * bins + static_cast<std::size_t>(lo) + rem % span;
        rem /= span;
      }
      sum += hist.density(cell);
    }
    trace.values[b] = sum / static_cast<double>(cube);
  }
  return trace;
}

double trace_oscillation(const DiagonalTrace& narrow, const DiagonalTrace& wide) {
  if (narrow.grid.size() != wide.grid.size())
    throw std::invalid_argument("trace_oscillation: traces use different grids");
  if (std::fabs(wide.band - 2.0 * narrow.band) > 1e-9 * wide.band)
    throw std::invalid_argument("trace_oscillation: wide band must be twice the narrow band");
  double worst = 0.0;
  for (std::size_t i = 0; i < narrow.values.size(); ++i)
    worst = std::max(worst, std::fabs(narrow.values[i] - wide.values[i]));
  return worst / narrow.band;
}

void write_density_csv(std::ostream& out, const DensityHistogram& hist) {
  for (std::size_t i = 1; i <= hist.n(); ++i) out << "bin_index_" << i << ',';
  out << "density\n";
  for (std::size_t c = 0; c < hist.cell_count(); ++c) {
    for (std::size_t idx : hist.multi_index(c)) out << idx << ',';
    out << format_double(hist.density(c)) << '\n';
  }
}

void write_trace_csv(std::ostream& out, const DiagonalTrace& trace) {
  out << "x,trace_value\n";
  for (std::size_t i = 0; i < trace.grid.size(); ++i)
    out << format_double(trace.grid[i]) << ',' << format_double(trace.values[i]) << '\n';
}

}  // namespace cml
