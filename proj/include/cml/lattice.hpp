#pragma once

// Globally coupled map lattice
//
//   x_i  ->  (1 - gamma) T(x_i) + (gamma / n) sum_j T(x_j)
//
// on [0,1)^n, with an optional additive uniform noise reduced mod 1.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "cml/rng.hpp"

namespace cml {

/// One affine piece x -> slope * x + intercept (reduced mod 1).
struct AffineBranch {
  double slope;
  double intercept;
};

/// Piecewise expanding map of the circle. Branch b covers
/// [boundaries[b], boundaries[b+1]); a point on a boundary belongs to the
/// branch on its right.
class LocalMap {
 public:
  LocalMap(std::vector<double> boundaries, std::vector<AffineBranch> branches);

  /// x -> slope * x + offset mod 1 for an integer slope >= 2.
  static LocalMap affine_mod1(int slope, double offset = 0.0);

  /// T(x); throws std::domain_error for x outside [0, 1).
  double operator()(double x) const;

  /// |T'(x)|.
  double abs_derivative(double x) const;

  std::size_t branch_index(double x) const;

  /// True if x is an interior discontinuity (0 is not, since T is read on
  /// the circle).
  bool on_discontinuity(double x) const;

  /// lambda = 1 / min |T'|.
  double expansion_bound() const { return expansion_bound_; }

  /// Set when every branch is the same formula slope * x + offset mod 1, which
  /// enables the vectorized step.
  bool uniform_affine() const { return uniform_; }
  double uniform_slope() const { return uniform_slope_; }
  double uniform_offset() const { return uniform_offset_; }

  std::span<const double> boundaries() const { return boundaries_; }
  std::span<const AffineBranch> branches() const { return branches_; }

 private:
  std::vector<double> boundaries_;
  std::vector<AffineBranch> branches_;
  double expansion_bound_ = 1.0;
  bool uniform_ = false;
  double uniform_slope_ = 0.0;
  double uniform_offset_ = 0.0;
};

/// Local map, lattice size and coupling strength.
struct MapSpec {
  MapSpec(LocalMap local_map, std::size_t n, double gamma);

  LocalMap local_map;
  std::size_t n;
  double gamma;

  /// gamma < 1 - lambda, the regime in which the extremal-index formulas hold.
  bool satisfies_ei_hypothesis() const { return gamma < 1.0 - local_map.expansion_bound(); }
};

/// Point of [0,1)^n.
class LatticeState {
 public:
  LatticeState() = default;
  explicit LatticeState(std::vector<double> components);

  static LatticeState diagonal(std::size_t n, double c);

  std::size_t size() const { return x_.size(); }
  double operator[](std::size_t i) const { return x_[i]; }
  std::span<const double> components() const { return x_; }

  friend bool operator==(const LatticeState&, const LatticeState&) = default;

 private:
  struct Unchecked {};
  LatticeState(Unchecked, std::vector<double> components) : x_(std::move(components)) {}
  friend LatticeState step(const LatticeState&, const MapSpec&);
  friend LatticeState step_noisy(const LatticeState&, const MapSpec&, double,
                                 std::span<const double>);

  std::vector<double> x_;
};

/// Additive noise intensity; omega is uniform on [-0.5, 0.5] per site and
/// step.
struct NoiseSpec {
  double intensity = 0.0;
};

struct TrajectoryConfig {
  MapSpec map;
  NoiseSpec noise{};
  std::size_t length = 10000;
  std::size_t burn_in = 1000;
  std::uint64_t seed = 0;
  /// Realization index; together with seed selects the random stream.
  std::uint64_t realization = 0;
  /// Uniform random initial state when empty.
  std::optional<LatticeState> initial_state{};
};

/// Stored states after burn-in, row-major (length x n).
class Trajectory {
 public:
  Trajectory(std::size_t n, std::size_t length) : n_(n), length_(length), data_(n * length) {}

  std::size_t n() const { return n_; }
  std::size_t length() const { return length_; }
  std::span<const double> operator[](std::size_t k) const { return {data_.data() + k * n_, n_}; }
  std::span<double> row(std::size_t k) { return {data_.data() + k * n_, n_}; }
  LatticeState state(std::size_t k) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::size_t n_;
  std::size_t length_;
  std::vector<double> data_;
};

double apply_local(const LocalMap& map, double x);

LatticeState step(const LatticeState& state, const MapSpec& spec);

/// Deterministic step, then x_i <- x_i + intensity * omega_i mod 1.
LatticeState step_noisy(const LatticeState& state, const MapSpec& spec, double intensity,
                        std::span<const double> omega);
LatticeState step_noisy(const LatticeState& state, const MapSpec& spec, const NoiseSpec& noise,
                        Rng& rng);

/// Single-step |det D T^|(x) = (1 - gamma)^(n-1) prod_k |T'(x_k)|.
double jacobian_det(const LatticeState& state, const MapSpec& spec);

/// det C_gamma = (1 - gamma)^(n-1).
double coupling_det(std::size_t n, double gamma);

/// The n x n coupling matrix, row-major: (1 - gamma) I + (gamma / n) 1 1^T.
std::vector<double> coupling_matrix(std::size_t n, double gamma);

/// Streaming iterator over the lattice; owns its random stream.
class Simulator {
 public:
  explicit Simulator(const TrajectoryConfig& config);

  std::span<const double> current() const { return x_; }
  void advance();
  void advance(std::size_t steps) {
    for (std::size_t i = 0; i < steps; ++i) advance();
  }

 private:
  MapSpec spec_;
  double noise_;
  Rng rng_;
  std::vector<double> x_;
  std::vector<double> scratch_;
  std::vector<double> omega_;
};

/// Burn-in then `length` stored states; the first stored state is the one
/// reached after burn_in steps.
Trajectory simulate(const TrajectoryConfig& config);

/// CSV `step,x_1,...,x_n` with 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace cml
