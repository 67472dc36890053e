#include "cml/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cml/error.hpp"
#include "cml/io.hpp"
#include "cml/parallel.hpp"
#include "cml/rng.hpp"
#include "kernels_internal.hpp"

namespace cml {

using kernels::detail::fold_unit;

UlamOperator::UlamOperator(std::size_t k, std::size_t sample_count, CsrMatrix transposed)
    : k_(k), sample_count_(sample_count), pt_(std::move(transposed)) {
  if (pt_.rows != k * k || pt_.row_ptr.size() != pt_.rows + 1)
    throw std::invalid_argument("UlamOperator: matrix shape does not match the grid");
}

void UlamOperator::apply(const std::vector<double>& v, std::vector<double>& out) const {
  out.resize(cells());
  kernels::active().csr_gather(pt_.view(), v, out);
}

std::vector<double> UlamOperator::row_sums() const {
  std::vector<double> sums(cells(), 0.0);
  for (std::size_t j = 0; j < pt_.rows; ++j)
    for (std::size_t e = pt_.row_ptr[j]; e < pt_.row_ptr[j + 1]; ++e) sums[pt_.col[e]] += pt_.val[e];
  return sums;
}

std::vector<UlamOperator::Entry> UlamOperator::entries() const {
  std::vector<Entry> out;
  out.reserve(pt_.nonzeros());
  for (std::size_t j = 0; j < pt_.rows; ++j)
    for (std::size_t e = pt_.row_ptr[j]; e < pt_.row_ptr[j + 1]; ++e)
      out.push_back({pt_.col[e], static_cast<std::uint32_t>(j), pt_.val[e]});
  std::sort(out.begin(), out.end(),
            [](const Entry& a, const Entry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  return out;
}

namespace {

struct SourceRows {
  std::vector<std::uint32_t> dst;
  std::vector<std::uint16_t> count;
  std::vector<std::uint32_t> length;  // entries per source cell
};

}  // namespace

UlamOperator build_ulam(const MapSpec& spec, const UlamOptions& options) {
  if (spec.n != 2) throw ConfigError("build_ulam: only the two-site lattice is supported");
  const std::size_t k = options.k;
  if (k < 1 || k > 2000) throw ConfigError("build_ulam: k must lie in [1, 2000]");
  const std::size_t s = options.samples_per_axis;
  if (s < 1 || s * s > 65535) throw ConfigError("build_ulam: samples_per_axis must lie in [1, 255]");
  const std::size_t samples = s * s;
  const std::size_t cells = k * k;
  if (static_cast<double>(cells) * 24.0 > static_cast<double>(options.memory_budget_bytes))
    throw ConfigError("build_ulam: grid exceeds the memory budget");

  const LocalMap& map = spec.local_map;
  const double keep = 1.0 - spec.gamma;
  const double half = spec.gamma / 2.0;
  const double kd = static_cast<double>(k);
  const double sd = static_cast<double>(s);

  // One block of source rows per first-axis index a; concatenated in order.
  std::vector<SourceRows> blocks(k);
  parallel_for(k, options.threads, [&](std::size_t a) {
    SourceRows& block = blocks[a];
    block.length.resize(k);
    std::vector<std::uint32_t> hits(samples);
    for (std::size_t b = 0; b < k; ++b) {
      const std::uint64_t stream = derive_seed({options.seed, a * k + b});
      std::size_t idx = 0;
      for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < s; ++j, ++idx) {
          // Jitter in (0.1, 0.9) keeps samples off the sub-cell edges.
          const double u = 0.1 + 0.8 * static_cast<double>(mix64(stream + 2 * idx) >> 11) * 0x1.0p-53;
          const double w = 0.1 + 0.8 * static_cast<double>(mix64(stream + 2 * idx + 1) >> 11) * 0x1.0p-53;
          const double x1 = (static_cast<double>(a) + (static_cast<double>(i) + u) / sd) / kd;
          const double x2 = (static_cast<double>(b) + (static_cast<double>(j) + w) / sd) / kd;
          const double t1 = map(x1);
          const double t2 = map(x2);
          const double shift = half * (t1 + t2);
          const double y1 = fold_unit(keep * t1 + shift);
          const double y2 = fold_unit(keep * t2 + shift);
          const auto c1 = std::min(static_cast<std::size_t>(y1 * kd), k - 1);
          const auto c2 = std::min(static_cast<std::size_t>(y2 * kd), k - 1);
          hits[idx] = static_cast<std::uint32_t>(c1 * k + c2);
        }
      }
      std::sort(hits.begin(), hits.end());
      std::uint32_t len = 0;
      for (std::size_t h = 0; h < samples;) {
        std::size_t e = h;
        while (e < samples && hits[e] == hits[h]) ++e;
        block.dst.push_back(hits[h]);
        block.count.push_back(static_cast<std::uint16_t>(e - h));
        ++len;
        h = e;
      }
      block.length[b] = len;
    }
  });

  std::size_t nnz = 0;
  for (const auto& block : blocks) nnz += block.dst.size();
  const double bytes = static_cast<double>(nnz) * 12.0 + static_cast<double>(cells) * 4.0;
  if (bytes > static_cast<double>(options.memory_budget_bytes))
    throw ConfigError("build_ulam: operator with " + std::to_string(nnz) +
                      " entries exceeds the memory budget");
  if (nnz > UINT32_MAX) throw ConfigError("build_ulam: too many nonzero entries");

  // Transpose to destination-major by counting sort; sources come out in
  // increasing order within each destination row.
  CsrMatrix pt;
  pt.rows = cells;
  pt.row_ptr.assign(cells + 1, 0);
  for (const auto& block : blocks)
    for (std::uint32_t d : block.dst) ++pt.row_ptr[d + 1];
  std::partial_sum(pt.row_ptr.begin(), pt.row_ptr.end(), pt.row_ptr.begin());
  pt.col.resize(nnz);
  pt.val.resize(nnz);
  std::vector<std::uint32_t> fill(pt.row_ptr.begin(), pt.row_ptr.end() - 1);
  const double inv = 1.0 / static_cast<double>(samples);
  for (std::size_t a = 0; a < k; ++a) {
    SourceRows& block = blocks[a];
    std::size_t e = 0;
    for (std::size_t b = 0; b < k; ++b) {
      const auto src = static_cast<std::uint32_t>(a * k + b);
      for (std::uint32_t l = 0; l < block.length[b]; ++l, ++e) {
        const std::uint32_t pos = fill[block.dst[e]]++;
        pt.col[pos] = src;
        pt.val[pos] = static_cast<double>(block.count[e]) * inv;
      }
    }
    block = SourceRows{};
  }
  return UlamOperator(k, samples, std::move(pt));
}

namespace {

double l1_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::fabs(x);
  return s;
}

double l1_diff(const std::vector<double>& a, const std::vector<double>& b, double scale_b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - scale_b * b[i]);
  return s;
}

constexpr double kResidualBound = 1e-10;

// Power iteration for v -> (v 1_D) P on nonnegative vectors of unit mass.
LeadingEigen power_with_hole(const UlamOperator& op, const std::vector<std::uint8_t>* hole,
                             std::vector<double> v, const PowerOptions& options) {
  const std::size_t cells = op.cells();
  if (v.empty()) v.assign(cells, 1.0 / static_cast<double>(cells));
  if (v.size() != cells) throw std::invalid_argument("power iteration: start vector has wrong size");
  const double mass0 = l1_norm(v);
  if (!(mass0 > 0.0)) throw std::invalid_argument("power iteration: start vector is zero");
  for (double& x : v) x = std::fabs(x) / mass0;

  std::vector<double> masked(cells);
  std::vector<double> next(cells);
  LeadingEigen out;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    for (std::size_t i = 0; i < cells; ++i) masked[i] = hole && (*hole)[i] ? 0.0 : v[i];
    op.apply(masked, next);
    const double rho = l1_norm(next);
    if (rho == 0.0) {
      out.rho = 0.0;
      out.vector = std::move(next);
      out.iterations = it;
      return out;
    }
    for (double& x : next) x /= rho;
    // ||v P~ - rho v||_1 / rho, measured against the previous iterate.
    const double residual = l1_diff(next, v, 1.0);
    v.swap(next);
    out.rho = rho;
    out.iterations = it;
    if (residual < options.tolerance || (it == options.max_iterations && residual < kResidualBound)) {
      out.vector = std::move(v);
      return out;
    }
  }
  throw NumericalError("power iteration did not converge within " +
                       std::to_string(options.max_iterations) + " iterations");
}

}  // namespace

DiscreteDensity invariant_density_ulam(const UlamOperator& op, const PowerOptions& options,
                                       std::vector<double> start) {
  auto eig = power_with_hole(op, nullptr, std::move(start), options);
  DiscreteDensity d;
  d.k = op.k();
  d.iterations = eig.iterations;
  d.mass = std::move(eig.vector);
  std::vector<double> image;
  op.apply(d.mass, image);
  d.residual = l1_diff(image, d.mass, 1.0);
  if (!(d.residual < kResidualBound))
    throw NumericalError("invariant_density_ulam: residual " + format_double(d.residual) + " above 1e-10");
  return d;
}

PerturbedOperator::PerturbedOperator(const UlamOperator& base, double nu) : base_(&base), nu_(nu) {
  if (!(nu >= 0.0)) throw std::invalid_argument("PerturbedOperator: nu must be >= 0");
  const std::size_t k = base.k();
  const double h = 1.0 / static_cast<double>(k);
  hole_.assign(k * k, 0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      const double gap = std::fabs(static_cast<double>(a) - static_cast<double>(b)) * h;
      if (gap <= nu + 1e-12) {
        hole_[a * k + b] = 1;
        ++hole_size_;
      } else if (gap - h <= nu) {
        // Closest corners are one cell width nearer the diagonal than the centers.
        ++boundary_cells_;
      }
    }
  }
}

LeadingEigen perturbed_leading_eigenvalue(const PerturbedOperator& pert, const PowerOptions& options) {
  return power_with_hole(pert.base(), &pert.hole(), {}, options);
}

namespace {

SpectralEi spectral_from(const PerturbedOperator& pert, const DiscreteDensity& invariant,
                         const PowerOptions& options) {
  if (invariant.mass.size() != pert.base().cells())
    throw std::invalid_argument("ei_spectral: density and operator grids differ");
  SpectralEi out;
  out.nu = pert.nu();
  out.hole_cells = pert.hole_size();
  out.boundary_cells = pert.boundary_cells();
  for (std::size_t c = 0; c < invariant.mass.size(); ++c)
    if (pert.hole()[c]) out.mu_strip += invariant.mass[c];
  if (!(out.mu_strip > 0.0)) throw NumericalError("ei_spectral: strip has zero invariant mass");
  // Starting from the invariant density shortens the iteration considerably.
  out.rho = power_with_hole(pert.base(), &pert.hole(), invariant.mass, options).rho;
  out.theta_raw = (1.0 - out.rho) / out.mu_strip;
  return out;
}

}  // namespace

SpectralEi ei_spectral(const PerturbedOperator& pert, const DiscreteDensity& invariant,
                       const PowerOptions& options) {
  return spectral_from(pert, invariant, options);
}

SpectralLadder ei_spectral_ladder(const UlamOperator& op, const DiscreteDensity& invariant,
                                  const std::vector<double>& nus, const PowerOptions& options) {
  if (nus.empty()) throw std::invalid_argument("ei_spectral_ladder: empty nu ladder");
  SpectralLadder out;
  for (double nu : nus) out.steps.push_back(spectral_from(PerturbedOperator(op, nu), invariant, options));
  std::sort(out.steps.begin(), out.steps.end(),
            [](const SpectralEi& a, const SpectralEi& b) { return a.nu > b.nu; });
  const SpectralEi& finest = out.steps.back();
  out.theta_finest = std::clamp(finest.theta_raw, 0.0, 1.0);
  double raw = finest.theta_raw;
  if (out.steps.size() > 1) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto m = static_cast<double>(out.steps.size());
    for (const auto& e : out.steps) {
      sx += e.nu;
      sy += e.theta_raw;
      sxx += e.nu * e.nu;
      sxy += e.nu * e.theta_raw;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    raw = (sy - slope * sx) / m;
  }
  out.theta_extrapolated = std::clamp(raw, 0.0, 1.0);
  auto& est = out.estimate;
  est.method = EiMethod::spectral_ulam;
  est.theta = out.theta_extrapolated;
  est.flagged = raw < 0.0 || raw > 1.0;
  est.note = "raw=" + format_double(raw) + " finest_nu=" + format_double(finest.nu) +
             " theta_finest=" + format_double(finest.theta_raw);
  est.metadata.n = 2;
  return out;
}

double second_eigenvalue_modulus(const UlamOperator& op, std::size_t iterations, std::uint64_t seed) {
  const std::size_t cells = op.cells();
  if (cells < 2 || iterations < 2) return 0.0;
  Rng rng(derive_seed({seed, 0x5ec0dULL}));
  std::vector<double> v(cells);
  for (double& x : v) x = rng.uniform() - 0.5;
  auto center = [&](std::vector<double>& w) {
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(cells);
    for (double& x : w) x -= mean;
    const double norm = l1_norm(w);
    if (norm > 0.0)
      for (double& x : w) x /= norm;
    return norm;
  };
  center(v);
  std::vector<double> next;
  const std::size_t window = std::max<std::size_t>(1, iterations / 4);
  double log_sum = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    op.apply(v, next);
    const double ratio = center(next);
    if (!(ratio > 1e-300)) return 0.0;
    if (it >= iterations - window) log_sum += std::log(ratio);
    v.swap(next);
  }
  return std::exp(log_sum / static_cast<double>(window));
}

std::vector<double> rebin(const std::vector<double>& mass, std::size_t k, std::size_t coarse) {
  if (coarse == 0 || k % coarse != 0) throw std::invalid_argument("rebin: coarse size must divide k");
  if (mass.size() != k * k) throw std::invalid_argument("rebin: mass has wrong size");
  const std::size_t f = k / coarse;
  std::vector<double> out(coarse * coarse, 0.0);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) out[(a / f) * coarse + b / f] += mass[a * k + b];
  return out;
}

void write_operator_csv(std::ostream& out, const UlamOperator& op) {
  out << "row,col,value\n";
  for (const auto& e : op.entries()) out << e.row << ',' << e.col << ',' << format_double(e.value) << '\n';
}

std::string spectral_json(std::size_t k, const SpectralEi& ei) {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["nu"] = ei.nu;
  j["rho"] = ei.rho;
  j["mu_strip"] = ei.mu_strip;
  j["theta_hat"] = ei.theta_raw;
  j["hole_cells"] = ei.hole_cells;
  j["boundary_cells"] = ei.boundary_cells;
  return j.dump(2);
}

}  // namespace cml
