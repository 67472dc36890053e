#include <immintrin.h>

#include <cmath>

#include "cml/kernels.hpp"
#include "kernels_internal.hpp"

namespace cml::kernels {
namespace {

inline __m256d frac4(__m256d y) {
  const __m256d f = _mm256_sub_pd(y, _mm256_round_pd(y, _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC));
  const __m256d wrap = _mm256_cmp_pd(f, _mm256_set1_pd(1.0), _CMP_GE_OQ);
  return _mm256_andnot_pd(wrap, f);
}

inline __m256d abs4(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

// (l0 + l1) + (l2 + l3), the same association as the scalar reference.
inline double combine_lanes(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void affine_mod1(std::span<const double> x, std::span<double> out, double slope, double offset) {
  const std::size_t n = x.size();
  const __m256d s = _mm256_set1_pd(slope);
  const __m256d c = _mm256_set1_pd(offset);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d y = _mm256_add_pd(_mm256_mul_pd(s, _mm256_loadu_pd(&x[i])), c);
    _mm256_storeu_pd(&out[i], frac4(y));
  }
  for (; i < n; ++i) out[i] = detail::frac(slope * x[i] + offset);
}

void couple(std::span<const double> t, std::span<double> out, double keep, double shift) {
  const std::size_t n = t.size();
  const __m256d k = _mm256_set1_pd(keep);
  const __m256d sh = _mm256_set1_pd(shift);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_add_pd(_mm256_mul_pd(k, _mm256_loadu_pd(&t[i])), sh);
    const __m256d over = _mm256_cmp_pd(v, one, _CMP_GE_OQ);
    _mm256_storeu_pd(&out[i], _mm256_sub_pd(v, _mm256_and_pd(over, one)));
  }
  for (; i < n; ++i) out[i] = detail::fold_unit(keep * t[i] + shift);
}

void add_mod1(std::span<double> x, std::span<const double> omega, double scale) {
  const std::size_t n = x.size();
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d y = _mm256_add_pd(_mm256_loadu_pd(&x[i]), _mm256_mul_pd(s, _mm256_loadu_pd(&omega[i])));
    _mm256_storeu_pd(&x[i], frac4(y));
  }
  for (; i < n; ++i) x[i] = detail::frac(x[i] + scale * omega[i]);
}

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(&x[i]));
  double total = combine_lanes(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

double l1_distance(std::span<const double> x, std::span<const double> z) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, abs4(_mm256_sub_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&z[i]))));
  double total = combine_lanes(acc);
  for (; i < n; ++i) total += std::fabs(x[i] - z[i]);
  return total;
}

double range(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double lo = x[0];
  double hi = x[0];
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vlo = _mm256_loadu_pd(&x[0]);
    __m256d vhi = vlo;
    for (i = 4; i + 4 <= n; i += 4) {
      const __m256d v = _mm256_loadu_pd(&x[i]);
      vlo = _mm256_min_pd(vlo, v);
      vhi = _mm256_max_pd(vhi, v);
    }
    alignas(32) double l[4];
    alignas(32) double h[4];
    _mm256_store_pd(l, vlo);
    _mm256_store_pd(h, vhi);
    for (int k = 0; k < 4; ++k) {
      lo = l[k] < lo ? l[k] : lo;
      hi = h[k] > hi ? h[k] : hi;
    }
  }
  for (; i < n; ++i) {
    lo = x[i] < lo ? x[i] : lo;
    hi = x[i] > hi ? x[i] : hi;
  }
  return hi - lo;
}

double max_adjacent_gap(std::span<const double> x, bool ring) {
  const std::size_t n = x.size();
  double gap = 0.0;
  std::size_t i = 0;
  if (n >= 5) {
    __m256d vmax = _mm256_setzero_pd();
    for (; i + 5 <= n; i += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(&x[i + 1]), _mm256_loadu_pd(&x[i]));
      vmax = _mm256_max_pd(vmax, abs4(d));
    }
    alignas(32) double m[4];
    _mm256_store_pd(m, vmax);
    for (double v : m) gap = v > gap ? v : gap;
  }
  for (; i + 1 < n; ++i) {
    const double d = std::fabs(x[i + 1] - x[i]);
    gap = d > gap ? d : gap;
  }
  if (ring && n > 2) {
    const double d = std::fabs(x[0] - x[n - 1]);
    gap = d > gap ? d : gap;
  }
  return gap;
}

void csr_gather(const CsrView& m, std::span<const double> v, std::span<double> y) {
  const std::size_t rows = m.row_ptr.size() - 1;
  const double* base = v.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t begin = m.row_ptr[r];
    const std::size_t end = m.row_ptr[r + 1];
    std::size_t k = begin;
    __m256d acc = _mm256_setzero_pd();
    for (; k + 4 <= end; k += 4) {
      const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&m.col[k]));
      const __m256d g = _mm256_i32gather_pd(base, idx, 8);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(&m.val[k]), g));
    }
    double total = combine_lanes(acc);
    for (; k < end; ++k) total += m.val[k] * v[m.col[k]];
    y[r] = total;
  }
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{
      "avx2", affine_mod1, couple, add_mod1, sum, l1_distance, range, max_adjacent_gap, csr_gather,
  };
  return table;
}

}  // namespace cml::kernels
