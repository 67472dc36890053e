#pragma once

// Data-parallel inner loops used by the lattice iteration, the observables
// and the Ulam mat-vec. Every kernel has a scalar reference implementation;
// SIMD variants must reproduce it bit for bit. Reductions that are not
// order-independent (sums, dot products) use a fixed four-lane blocked order
// in both variants so the results agree exactly.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace cml::kernels {

/// Read-only view of a CSR matrix. Row r holds entries
/// [row_ptr[r], row_ptr[r+1]) of col/val.
struct CsrView {
  std::span<const std::uint32_t> row_ptr;
  std::span<const std::uint32_t> col;
  std::span<const double> val;
};

struct KernelTable {
  const char* name;

  /// out[i] = frac(slope * x[i] + offset), with 1.0 folded to 0.0.
  void (*affine_mod1)(std::span<const double> x, std::span<double> out, double slope,
                      double offset);

  /// out[i] = keep * t[i] + shift, folded back into [0, 1).
  void (*couple)(std::span<const double> t, std::span<double> out, double keep, double shift);

  /// x[i] = frac(x[i] + scale * omega[i]).
  void (*add_mod1)(std::span<double> x, std::span<const double> omega, double scale);

  /// Sum in blocked four-lane order.
  double (*sum)(std::span<const double> x);

  /// Sum of |x[i] - z[i]| in blocked four-lane order.
  double (*l1_distance)(std::span<const double> x, std::span<const double> z);

  /// max(x) - min(x); 0 for fewer than two entries.
  double (*range)(std::span<const double> x);

  /// max over i of |x[i+1] - x[i]|, plus |x[0] - x[n-1]| when ring is set.
  double (*max_adjacent_gap)(std::span<const double> x, bool ring);

  /// y[r] = sum_k val[k] * v[col[k]] over row r.
  void (*csr_gather)(const CsrView& m, std::span<const double> v, std::span<double> y);
};

const KernelTable& scalar_table();

/// AVX2 table, or nullptr when not compiled in or not supported by the CPU.
const KernelTable* avx2_table();

/// Table used by the library. Chosen on first use: AVX2 when available,
/// unless the environment variable CML_KERNELS is set to "scalar".
const KernelTable& active();

/// Override the active table: "scalar", "avx2" or "auto". Returns false if
/// the requested variant is unavailable (the selection is then unchanged).
bool select(std::string_view name);

}  // namespace cml::kernels
