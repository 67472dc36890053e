#include <algorithm>
#include <cmath>

#include "cml/kernels.hpp"
#include "kernels_internal.hpp"

namespace cml::kernels {
namespace {

void affine_mod1(std::span<const double> x, std::span<double> out, double slope, double offset) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = detail::frac(slope * x[i] + offset);
}

void couple(std::span<const double> t, std::span<double> out, double keep, double shift) {
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = detail::fold_unit(keep * t[i] + shift);
}

void add_mod1(std::span<double> x, std::span<const double> omega, double scale) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = detail::frac(x[i] + scale * omega[i]);
}

double sum(std::span<const double> x) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t blocks = x.size() / 4 * 4;
  for (std::size_t i = 0; i < blocks; i += 4)
    for (std::size_t l = 0; l < 4; ++l) acc[l] += x[i + l];
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = blocks; i < x.size(); ++i) total += x[i];
  return total;
}

double l1_distance(std::span<const double> x, std::span<const double> z) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t blocks = x.size() / 4 * 4;
  for (std::size_t i = 0; i < blocks; i += 4)
    for (std::size_t l = 0; l < 4; ++l) acc[l] += std::fabs(x[i + l] - z[i + l]);
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = blocks; i < x.size(); ++i) total += std::fabs(x[i] - z[i]);
  return total;
}

double range(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *hi - *lo;
}

double max_adjacent_gap(std::span<const double> x, bool ring) {
  double gap = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) gap = std::max(gap, std::fabs(x[i + 1] - x[i]));
  if (ring && x.size() > 2) gap = std::max(gap, std::fabs(x.front() - x.back()));
  return gap;
}

void csr_gather(const CsrView& m, std::span<const double> v, std::span<double> y) {
  const std::size_t rows = m.row_ptr.size() - 1;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t begin = m.row_ptr[r];
    const std::size_t end = m.row_ptr[r + 1];
    const std::size_t blocks = begin + (end - begin) / 4 * 4;
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = begin; k < blocks; k += 4)
      for (std::size_t l = 0; l < 4; ++l) acc[l] += m.val[k + l] * v[m.col[k + l]];
    double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (std::size_t k = blocks; k < end; ++k) total += m.val[k] * v[m.col[k]];
    y[r] = total;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar", affine_mod1, couple, add_mod1, sum, l1_distance, range, max_adjacent_gap, csr_gather,
  };
  return table;
}

}  // namespace cml::kernels
