#pragma once

// Ulam discretization of the transfer operator of the two-site lattice on a
// k x k grid, its invariant density, and the leading eigenvalue of the
// operator with the diagonal strip removed.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cml/evt.hpp"
#include "cml/kernels.hpp"
#include "cml/lattice.hpp"

namespace cml {

struct CsrMatrix {
  std::size_t rows = 0;
  std::vector<std::uint32_t> row_ptr;
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  kernels::CsrView view() const { return {row_ptr, col, val}; }
  std::size_t nonzeros() const { return val.size(); }
};

struct UlamOptions {
  std::size_t k = 300;
  /// Samples per cell are samples_per_axis^2, one per sub-cell, jittered away
  /// from the sub-cell edges.
  std::size_t samples_per_axis = 12;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t memory_budget_bytes = std::size_t{2} << 30;
};

/// Cell c = a * k + b covers [a/k, (a+1)/k) x [b/k, (b+1)/k).
class UlamOperator {
 public:
  UlamOperator(std::size_t k, std::size_t sample_count, CsrMatrix transposed);

  std::size_t k() const { return k_; }
  std::size_t cells() const { return k_ * k_; }
  std::size_t sample_count() const { return sample_count_; }

  /// Stored by destination: row j lists (i, P_ij) for all source cells i.
  const CsrMatrix& transposed() const { return pt_; }

  /// out = v P (densities are row vectors).
  void apply(const std::vector<double>& v, std::vector<double>& out) const;

  /// Source-cell row sums of P.
  std::vector<double> row_sums() const;

  /// Entries (i, j, P_ij) sorted by (i, j).
  struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    double value;
  };
  std::vector<Entry> entries() const;

 private:
  std::size_t k_;
  std::size_t sample_count_;
  CsrMatrix pt_;
};

UlamOperator build_ulam(const MapSpec& spec, const UlamOptions& options);

struct PowerOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 100000;
};

/// Cell masses summing to 1.
struct DiscreteDensity {
  std::size_t k = 0;
  std::vector<double> mass;
  double residual = 0.0;
  std::size_t iterations = 0;
};

/// Leading left eigenvector by power iteration from `start` (uniform when
/// empty). Throws NumericalError unless ||vP - v||_1 < 1e-10 within the cap.
DiscreteDensity invariant_density_ulam(const UlamOperator& op, const PowerOptions& options = {},
                                       std::vector<double> start = {});

/// The operator with source cells in the diagonal strip removed.
class PerturbedOperator {
 public:
  /// Hole cells: centers with |c_1 - c_2| <= nu.
  PerturbedOperator(const UlamOperator& base, double nu);

  const UlamOperator& base() const { return *base_; }
  double nu() const { return nu_; }
  const std::vector<std::uint8_t>& hole() const { return hole_; }
  std::size_t hole_size() const { return hole_size_; }
  /// Cells whose closure meets the strip but whose center is outside it.
  std::size_t boundary_cells() const { return boundary_cells_; }

 private:
  const UlamOperator* base_;
  double nu_;
  std::vector<std::uint8_t> hole_;
  std::size_t hole_size_ = 0;
  std::size_t boundary_cells_ = 0;
};

struct LeadingEigen {
  double rho = 1.0;
  std::vector<double> vector;
  std::size_t iterations = 0;
};

/// Leading eigenvalue of v -> (v 1_D) P by power iteration on nonnegative
/// vectors.
LeadingEigen perturbed_leading_eigenvalue(const PerturbedOperator& pert,
                                          const PowerOptions& options = {});

struct SpectralEi {
  double nu = 0.0;
  double rho = 1.0;
  double mu_strip = 0.0;
  /// (1 - rho) / mu_strip, unclamped.
  double theta_raw = 0.0;
  std::size_t hole_cells = 0;
  std::size_t boundary_cells = 0;
};

/// theta = (1 - rho) / mu(strip), mu from the discrete invariant density.
SpectralEi ei_spectral(const PerturbedOperator& pert, const DiscreteDensity& invariant,
                       const PowerOptions& options = {});

struct SpectralLadder {
  std::vector<SpectralEi> steps;
  /// Least-squares line theta(nu) evaluated at nu = 0.
  double theta_extrapolated = 0.0;
  /// Value at the finest nu, clamped to [0, 1].
  double theta_finest = 0.0;
  EiEstimate estimate;
};

/// Runs ei_spectral over a nu ladder (at least two rungs for an
/// extrapolation). The estimate is the least-squares line through
/// (nu, theta_raw) evaluated at nu = 0, clamped to [0, 1]; the finest rung is
/// reported alongside.
SpectralLadder ei_spectral_ladder(const UlamOperator& op, const DiscreteDensity& invariant,
                                  const std::vector<double>& nus, const PowerOptions& options = {});

/// Modulus of the second eigenvalue: power iteration on the invariant
/// subspace of mass-zero vectors, rate from the geometric mean of the last
/// norm ratios.
double second_eigenvalue_modulus(const UlamOperator& op, std::size_t iterations = 400,
                                 std::uint64_t seed = 0);

/// Sums cell masses of a k x k density into a coarser k' x k' grid (k' | k).
std::vector<double> rebin(const std::vector<double>& mass, std::size_t k, std::size_t coarse);

/// CSV `row,col,value`.
void write_operator_csv(std::ostream& out, const UlamOperator& op);

/// JSON {k, nu, rho, mu_strip, theta_hat}.
std::string spectral_json(std::size_t k, const SpectralEi& ei);

}  // namespace cml
