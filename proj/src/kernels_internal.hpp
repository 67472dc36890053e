#pragma once

#include <cmath>

namespace cml::kernels::detail {

// Fractional part in [0, 1); y - floor(y) can round up to 1.0 for tiny
// negative y, which is folded to 0.
inline double frac(double y) {
  const double f = y - std::floor(y);
  return f >= 1.0 ? 0.0 : f;
}

// Convex combinations of values in [0, 1) can round up to exactly 1.0.
inline double fold_unit(double y) { return y >= 1.0 ? y - 1.0 : y; }

}  // namespace cml::kernels::detail
