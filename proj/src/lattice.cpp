#include "cml/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "cml/error.hpp"
#include "cml/io.hpp"
#include "cml/kernels.hpp"
#include "kernels_internal.hpp"

namespace cml {

using kernels::detail::frac;

LocalMap::LocalMap(std::vector<double> boundaries, std::vector<AffineBranch> branches)
    : boundaries_(std::move(boundaries)), branches_(std::move(branches)) {
  if (branches_.empty() || boundaries_.size() != branches_.size() + 1)
    throw std::invalid_argument("LocalMap: need one more boundary than branches");
  if (boundaries_.front() != 0.0 || boundaries_.back() != 1.0)
    throw std::invalid_argument("LocalMap: boundaries must start at 0 and end at 1");
  if (!std::is_sorted(boundaries_.begin(), boundaries_.end(), std::less_equal<>{}) ||
      std::adjacent_find(boundaries_.begin(), boundaries_.end()) != boundaries_.end())
    throw std::invalid_argument("LocalMap: boundaries must be strictly increasing");
  double min_slope = INFINITY;
  for (const auto& b : branches_) {
    if (!(std::fabs(b.slope) > 1.0))
      throw std::invalid_argument("LocalMap: every branch must be expanding (|slope| > 1)");
    min_slope = std::min(min_slope, std::fabs(b.slope));
  }
  expansion_bound_ = 1.0 / min_slope;
}

LocalMap LocalMap::affine_mod1(int slope, double offset) {
  if (slope < 2) throw std::invalid_argument("affine_mod1: slope must be an integer >= 2");
  if (!(offset >= 0.0 && offset < 1.0))
    throw std::invalid_argument("affine_mod1: offset must lie in [0, 1)");
  std::vector<double> boundaries{0.0};
  std::vector<AffineBranch> branches{{static_cast<double>(slope), offset}};
  const int last = offset > 0.0 ? slope : slope - 1;
  for (int k = 1; k <= last; ++k) {
    boundaries.push_back((k - offset) / slope);
    branches.push_back({static_cast<double>(slope), offset - k});
  }
  boundaries.push_back(1.0);
  LocalMap map(std::move(boundaries), std::move(branches));
  map.uniform_ = true;
  map.uniform_slope_ = slope;
  map.uniform_offset_ = offset;
  return map;
}

std::size_t LocalMap::branch_index(double x) const {
  auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), x);
  const auto idx = static_cast<std::size_t>(it - boundaries_.begin());
  return std::min(idx == 0 ? 0 : idx - 1, branches_.size() - 1);
}

double LocalMap::operator()(double x) const {
  if (!(x >= 0.0 && x < 1.0))
    throw std::domain_error("apply_local: x = " + std::to_string(x) + " outside [0, 1)");
  if (uniform_) return frac(uniform_slope_ * x + uniform_offset_);
  const auto& b = branches_[branch_index(x)];
  return frac(b.slope * x + b.intercept);
}

double LocalMap::abs_derivative(double x) const {
  return std::fabs(branches_[branch_index(x)].slope);
}

bool LocalMap::on_discontinuity(double x) const {
  return std::binary_search(boundaries_.begin() + 1, boundaries_.end() - 1, x);
}

MapSpec::MapSpec(LocalMap map, std::size_t lattice_size, double coupling)
    : local_map(std::move(map)), n(lattice_size), gamma(coupling) {
  if (n < 2) throw std::invalid_argument("MapSpec: lattice size must be >= 2");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("MapSpec: coupling must lie in [0, 1)");
}

LatticeState::LatticeState(std::vector<double> components) : x_(std::move(components)) {
  for (double v : x_)
    if (!(v >= 0.0 && v < 1.0))
      throw std::domain_error("LatticeState: component " + std::to_string(v) + " outside [0, 1)");
}

LatticeState LatticeState::diagonal(std::size_t n, double c) {
  return LatticeState(std::vector<double>(n, c));
}

LatticeState Trajectory::state(std::size_t k) const {
  auto r = (*this)[k];
  return LatticeState(std::vector<double>(r.begin(), r.end()));
}

double apply_local(const LocalMap& map, double x) { return map(x); }

namespace {

void check_size(std::span<const double> x, const MapSpec& spec) {
  if (x.size() != spec.n)
    throw std::invalid_argument("lattice state has " + std::to_string(x.size()) +
                                " components, map expects " + std::to_string(spec.n));
}

// out <- T^(x); `local` is scratch of size n.
void step_into(std::span<const double> x, std::span<double> out, std::span<double> local,
               const MapSpec& spec) {
  const auto& k = kernels::active();
  const LocalMap& map = spec.local_map;
  if (map.uniform_affine()) {
    k.affine_mod1(x, local, map.uniform_slope(), map.uniform_offset());
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) local[i] = map(x[i]);
  }
  const double shift = spec.gamma / static_cast<double>(spec.n) * k.sum(local);
  k.couple(local, out, 1.0 - spec.gamma, shift);
}

}  // namespace

LatticeState step(const LatticeState& state, const MapSpec& spec) {
  check_size(state.components(), spec);
  std::vector<double> local(spec.n);
  std::vector<double> out(spec.n);
  step_into(state.components(), out, local, spec);
  return LatticeState(LatticeState::Unchecked{}, std::move(out));
}

LatticeState step_noisy(const LatticeState& state, const MapSpec& spec, double intensity,
                        std::span<const double> omega) {
  check_size(state.components(), spec);
  if (omega.size() != spec.n) throw std::invalid_argument("step_noisy: omega size mismatch");
  std::vector<double> local(spec.n);
  std::vector<double> out(spec.n);
  step_into(state.components(), out, local, spec);
  if (intensity != 0.0) kernels::active().add_mod1(out, omega, intensity);
  return LatticeState(LatticeState::Unchecked{}, std::move(out));
}

LatticeState step_noisy(const LatticeState& state, const MapSpec& spec, const NoiseSpec& noise,
                        Rng& rng) {
  std::vector<double> omega(spec.n);
  for (double& w : omega) w = rng.uniform() - 0.5;
  return step_noisy(state, spec, noise.intensity, omega);
}

double jacobian_det(const LatticeState& state, const MapSpec& spec) {
  check_size(state.components(), spec);
  double slopes = 1.0;
  for (double x : state.components()) {
    if (spec.local_map.on_discontinuity(x))
      throw BoundaryError("jacobian_det: component " + format_double(x) +
                          " sits on a discontinuity of the local map");
    slopes *= spec.local_map.abs_derivative(x);
  }
  return coupling_det(spec.n, spec.gamma) * slopes;
}

double coupling_det(std::size_t n, double gamma) {
  return std::pow(1.0 - gamma, static_cast<double>(n - 1));
}

std::vector<double> coupling_matrix(std::size_t n, double gamma) {
  std::vector<double> c(n * n, gamma / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) c[i * n + i] += 1.0 - gamma;
  return c;
}

Simulator::Simulator(const TrajectoryConfig& config)
    : spec_(config.map),
      noise_(config.noise.intensity),
      rng_(derive_seed({config.seed, config.realization})),
      x_(config.map.n),
      scratch_(config.map.n),
      omega_(config.map.n) {
  if (noise_ < 0.0) throw std::invalid_argument("noise intensity must be >= 0");
  if (config.initial_state) {
    check_size(config.initial_state->components(), spec_);
    auto c = config.initial_state->components();
    std::copy(c.begin(), c.end(), x_.begin());
  } else {
    for (double& v : x_) v = rng_.uniform();
  }
}

void Simulator::advance() {
  step_into(x_, x_, scratch_, spec_);
  if (noise_ > 0.0) {
    for (double& w : omega_) w = rng_.uniform() - 0.5;
    kernels::active().add_mod1(x_, omega_, noise_);
  }
}

Trajectory simulate(const TrajectoryConfig& config) {
  if (config.length == 0) throw std::invalid_argument("simulate: length must be > 0");
  Simulator sim(config);
  sim.advance(config.burn_in);
  Trajectory out(config.map.n, config.length);
  for (std::size_t k = 0; k < config.length; ++k) {
    auto row = out.row(k);
    auto cur = sim.current();
    std::copy(cur.begin(), cur.end(), row.begin());
    if (k + 1 < config.length) sim.advance();
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "step";
  for (std::size_t i = 1; i <= trajectory.n(); ++i) out << ",x_" << i;
  out << '\n';
  for (std::size_t k = 0; k < trajectory.length(); ++k) {
    out << k;
    for (double v : trajectory[k]) out << ',' << format_double(v, 17);
    out << '\n';
  }
}

}  // namespace cml
