#pragma once

// Post-processing statistics for long runs: convergence-order fits,
// Pearson correlation, enstrophy histograms and total-variation distance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace etdsav {

/// Least-squares slope of log(error) against log(tau).
inline double estimate_order(std::span<const double> taus, std::span<const double> errors) {
  if (taus.size() != errors.size() || taus.size() < 3) {
    throw std::invalid_argument("estimate_order: need >= 3 (tau, error) pairs");
  }
  const std::size_t n = taus.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(taus[i] > 0.0) || !(errors[i] > 0.0)) {
      throw std::invalid_argument("estimate_order: values must be positive");
    }
    mx += std::log(taus[i]);
    my += std::log(errors[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(taus[i]) - mx;
    sxy += dx * (std::log(errors[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("estimate_order: all tau values are equal");
  return sxy / sxx;
}

namespace detail {
// Neumaier-compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};
}  // namespace detail

/// Pearson correlation coefficient, one pass (Welford co-moments with
/// compensated accumulation).
inline double pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pcc: series must have equal length >= 2");
  }
  double mx = 0.0, my = 0.0;
  detail::CompensatedSum sxx, syy, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    mx += dx / k;
    my += dy / k;
    sxx.add(dx * (x[i] - mx));
    syy.add(dy * (y[i] - my));
    sxy.add(dx * (y[i] - my));
  }
  const double vx = sxx.value(), vy = syy.value();
  if (!(vx > 0.0) || !(vy > 0.0)) throw std::invalid_argument("pcc: zero variance");
  return std::clamp(sxy.value() / std::sqrt(vx * vy), -1.0, 1.0);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

inline MeanStd mean_std(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean_std: empty series");
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return {m, std::sqrt(s / static_cast<double>(x.size()))};
}

/// Resamples (t, value) on t_start, t_start + dt, ... <= t_end by taking the
/// latest sample at or before each grid time.  Grid times before the first
/// sample are skipped.
inline std::vector<double> resample_uniform(std::span<const double> t, std::span<const double> v,
                                            double t_start, double t_end, double dt) {
  if (t.size() != v.size()) throw std::invalid_argument("resample_uniform: length mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("resample_uniform: dt must be positive");
  std::vector<double> out;
  if (t.empty()) return out;
  std::size_t j = 0;
  const long count = static_cast<long>(std::floor((t_end - t_start) / dt + 1e-9));
  for (long i = 0; i <= count; ++i) {
    const double ti = t_start + static_cast<double>(i) * dt;
    if (ti < t.front()) continue;
    while (j + 1 < t.size() && t[j + 1] <= ti) ++j;
    out.push_back(v[j]);
  }
  return out;
}

/// `bins` uniform bins spanning [min, max] of the pooled samples.
inline std::vector<double> pooled_edges(std::span<const double> a, std::span<const double> b, int bins = 64) {
  if (bins < 1) throw std::invalid_argument("pooled_edges: bins must be >= 1");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!std::isfinite(lo)) throw std::invalid_argument("pooled_edges: no samples");
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * i / bins;
  return edges;
}

/// Normalized histogram; samples outside the edges fall into the end bins.
inline std::vector<double> enstrophy_pdf(std::span<const double> samples, std::span<const double> edges) {
  if (samples.empty()) throw std::invalid_argument("enstrophy_pdf: empty series");
  if (edges.size() < 2) throw std::invalid_argument("enstrophy_pdf: need >= 2 edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("enstrophy_pdf: edges must increase");
  }
  const std::size_t nb = edges.size() - 1;
  std::vector<double> p(nb, 0.0);
  for (double s : samples) {
    auto it = std::upper_bound(edges.begin(), edges.end(), s);
    std::size_t bin = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
    bin = std::min(bin, nb - 1);
    p[bin] += 1.0;
  }
  for (double& v : p) v /= static_cast<double>(samples.size());
  return p;
}

inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: length mismatch");
  double sp = 0.0, sq = 0.0, d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
    d += std::abs(p[i] - q[i]);
  }
  if (std::abs(sp - 1.0) > 1e-12 || std::abs(sq - 1.0) > 1e-12) {
    throw std::invalid_argument("tv_distance: inputs must sum to 1");
  }
  return 0.5 * d;
}

/// TV distance of the conditional distributions on the bins whose lower
/// edge is below (or at/above) `split`.
struct SplitTv {
  double below = 0.0;
  double above = 0.0;
  double full = 0.0;
};

inline SplitTv split_tv_distance(std::span<const double> p, std::span<const double> q,
                                 std::span<const double> edges, double split) {
  if (p.size() != q.size() || edges.size() != p.size() + 1) {
    throw std::invalid_argument("split_tv_distance: size mismatch");
  }
  SplitTv out;
  out.full = tv_distance(p, q);
  auto conditional = [&](bool upper) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool is_upper = edges[i] >= split;
      if (is_upper == upper) {
        a.push_back(p[i]);
        b.push_back(q[i]);
      }
    }
    double sa = 0.0, sb = 0.0;
    for (double v : a) sa += v;
    for (double v : b) sb += v;
    if (sa == 0.0 && sb == 0.0) return 0.0;
    if (sa == 0.0 || sb == 0.0) return 1.0;
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] / sa - b[i] / sb);
    return 0.5 * d;
  };
  out.below = conditional(false);
  out.above = conditional(true);
  return out;
}

/// Fraction of samples strictly above `threshold`.
inline double tail_mass(std::span<const double> samples, double threshold) {
  if (samples.empty()) return 0.0;
  std::size_t c = 0;
  for (double s : samples) c += s > threshold ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(samples.size());
}

}  // namespace etdsav
