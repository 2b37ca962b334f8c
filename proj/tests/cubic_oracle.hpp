#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "etdsav/scheme.hpp"

namespace etdsav::testing {

inline long double cubic_value_ld(const StageData& s, long double r) {
  const long double A = s.A, B = s.B, C = s.C;
  return ((B * r - B) * r + (1.0L + A - B)) * r - (A - B + C);
}

/// Smallest real root by a sign scan over a geometric grid (relative spacing
/// 1e-2 from 1e-18 up to the Cauchy bound, both signs) and bisection in long
/// double.  Independent of the solver's critical-point logic.
inline double smallest_root_oracle(const StageData& s) {
  const long double A = s.A, B = s.B, C = s.C;
  if (B == 0.0L) return static_cast<double>((A - B + C) / (1.0L + A - B));
  const long double bound =
      1.0L + std::max({1.0L, std::fabs((1.0L + A - B) / B), std::fabs((A - B + C) / B)});
  // Points run -bound .. -1e-18, 0, 1e-18 .. bound.
  long double m = bound, a = -bound, ga = cubic_value_ld(s, a);
  int side = -1;
  while (true) {
    if (ga == 0.0L) return static_cast<double>(a);
    long double b;
    if (side < 0) {
      m /= 1.01L;
      if (m > 1e-18L) {
        b = -m;
      } else {
        b = 0.0L;
        side = 0;
      }
    } else if (side == 0) {
      b = m;
      side = 1;
    } else {
      m *= 1.01L;
      if (m > bound * 1.01L) break;
      b = m;
    }
    const long double gb = cubic_value_ld(s, b);
    if ((ga < 0) != (gb < 0) || gb == 0.0L) {
      long double x = a, y = b;
      for (int it = 0; it < 200; ++it) {
        const long double mid = 0.5L * (x + y);
        if ((cubic_value_ld(s, mid) < 0) == (ga < 0)) {
          x = mid;
        } else {
          y = mid;
        }
      }
      return static_cast<double>(0.5L * (x + y));
    }
    a = b;
    ga = gb;
  }
  return NAN;
}

/// Random stage scalars over the range a step can produce: |A| <= 1/2 (A is
/// O(tau^2) by skew symmetry), B log-uniform on [1e-12, 10] with some exact
/// zeros, |C| <= 1 log-uniform in magnitude.  Outside |A| < 1 the roots can
/// reach 1e4 and a double can no longer hold a 1e-13 residual.
inline StageData random_cubic(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> sign(-1.0, 1.0);
  std::uniform_real_distribution<double> expo(-12.0, 0.0);
  std::uniform_real_distribution<double> bexp(-12.0, 1.0);
  std::uniform_int_distribution<int> dice(0, 49);
  StageData s;
  s.A = 0.5 * sign(rng) * std::pow(10.0, expo(rng));
  s.B = dice(rng) == 0 ? 0.0 : std::pow(10.0, bexp(rng));
  if (s.B == 0.0) s.A = 0.0;
  s.C = sign(rng) * std::pow(10.0, expo(rng));
  return s;
}

}  // namespace etdsav::testing
