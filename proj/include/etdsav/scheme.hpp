#pragma once

// Variable-step exponential time differencing with a mean-reverting scalar
// auxiliary variable (second-order two-step scheme and its embedded
// first-order companion) for the 2D vorticity equation
//
//   omega_t + nu L omega + (1 - r^2) B(omega~, omega~) = f,   L = -Lap,
//
// where omega~ is the midpoint extrapolation and r mean-reverts to 0 at
// rate gamma.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "etdsav/grid.hpp"
#include "etdsav/phi.hpp"
#include "etdsav/spectral.hpp"

namespace etdsav {

/// Vorticity forcing f(t); time-independent forcing is stored once.
class Forcing {
 public:
  using Generator = std::function<ScalarFieldHat(double)>;

  Forcing() = default;
  static Forcing constant(ScalarFieldHat f) {
    Forcing out;
    f.coeffs()[0] = 0.0;
    out.constant_ = std::move(f);
    return out;
  }
  static Forcing time_dependent(Generator gen) {
    Forcing out;
    out.generator_ = std::move(gen);
    return out;
  }
  static Forcing none(const GridPtr& grid) { return constant(ScalarFieldHat::zeros(grid)); }

  bool is_constant() const noexcept { return constant_.has_value(); }

  ScalarFieldHat at(double t) const {
    if (constant_) return *constant_;
    if (!generator_) throw std::logic_error("Forcing: not initialized");
    ScalarFieldHat f = generator_(t);
    f.coeffs()[0] = 0.0;
    return f;
  }

 private:
  std::optional<ScalarFieldHat> constant_;
  Generator generator_;
};

struct SchemeParams {
  double nu = 0.0;
  double gamma = 0.0;
  Forcing forcing;

  void validate() const {
    if (!(nu > 0.0)) throw std::invalid_argument("SchemeParams: nu must be positive");
    if (!(gamma > 0.0)) throw std::invalid_argument("SchemeParams: gamma must be positive");
  }
};

/// Two-level history (omega^{n-1}, omega^n), auxiliary r^n, t_n and
/// tau_n = t_n - t_{n-1}.
struct SolverState {
  ScalarFieldHat omega_prev;
  ScalarFieldHat omega_curr;
  double r = 0.0;
  double t = 0.0;
  double tau_prev = 0.0;
  long step_index = 0;
};

struct StageData {
  ScalarFieldHat u1;
  ScalarFieldHat u2;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
};

struct StepResult {
  SolverState state;
  double r2 = 0.0;
  double r1 = 0.0;
  ScalarFieldHat omega2;
  ScalarFieldHat omega1;
  StageData stage;
};

/// ((tau_next + 2 tau_prev) / (2 tau_prev)) curr - (tau_next / (2 tau_prev)) prev.
inline ScalarFieldHat extrapolate_midpoint(const ScalarFieldHat& prev, const ScalarFieldHat& curr,
                                           double tau_prev, double tau_next) {
  if (!(tau_prev > 0.0) || !(tau_next > 0.0)) {
    throw std::invalid_argument("extrapolate_midpoint: step sizes must be positive");
  }
  if (!prev.same_grid(curr)) throw std::invalid_argument("extrapolate_midpoint: grid mismatch");
  const double a = (tau_next + 2.0 * tau_prev) / (2.0 * tau_prev);
  const double b = tau_next / (2.0 * tau_prev);
  ScalarFieldHat out(curr.grid_ptr());
  auto o = out.coeffs();
  auto c = curr.coeffs();
  auto p = prev.coeffs();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * c[i] - b * p[i];
  return out;
}

// ---------------------------------------------------------------------------
// Auxiliary-variable cubic
//   g(r) = B r^3 - B r^2 + (1 + A - B) r - (A - B + C).

inline double cubic_value(const StageData& s, double r) {
  return ((s.B * r - s.B) * r + (1.0 + s.A - s.B)) * r - (s.A - s.B + s.C);
}

/// Residual scale used by the solver's acceptance test.
inline double cubic_tolerance(const StageData& s) { return 1e-13 * std::max(1.0, std::abs(s.C)); }

namespace detail {

// Newton iteration safeguarded by bisection on a sign-changing bracket
// [lo, hi] with g(lo) <= 0 <= g(hi).
inline double bracketed_root(const StageData& s, double lo, double hi, double guess) {
  auto g = [&](double r) { return cubic_value(s, r); };
  auto dg = [&](double r) { return (3.0 * s.B * r - 2.0 * s.B) * r + (1.0 + s.A - s.B); };
  if (g(lo) == 0.0) return lo;
  if (g(hi) == 0.0) return hi;
  double r = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double gr = g(r);
    if (gr == 0.0) return r;
    if (gr < 0.0) {
      lo = r;
    } else {
      hi = r;
    }
    const double d = dg(r);
    double next = (d != 0.0) ? r - gr / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double eps = std::numeric_limits<double>::epsilon();
    if (std::abs(next - r) <= eps * std::abs(r) || hi - lo <= 4.0 * eps * std::abs(r)) {
      r = next;
      break;
    }
    r = next;
  }
  return r;
}

}  // namespace detail

/// Smallest real root of g.  Reduces to the linear solution when B = 0.
///
/// Real roots are located through the critical points of g (the sign of the
/// derivative's discriminant decides between one and three real roots), then
/// refined by safeguarded Newton; the last iterates are Newton polish steps.
inline double solve_cubic(const StageData& s) {
  if (!(s.B >= 0.0) || !std::isfinite(s.A) || !std::isfinite(s.B) || !std::isfinite(s.C)) {
    throw std::runtime_error("solve_cubic: invalid coefficients");
  }
  const double c1 = 1.0 + s.A - s.B;
  const double c0 = s.A - s.B + s.C;
  if (s.B == 0.0) {
    if (c1 == 0.0) throw std::runtime_error("solve_cubic: degenerate linear equation");
    return c0 / c1;
  }

  // Cauchy bound on |root| for the monic cubic r^3 - r^2 + (c1/B) r - c0/B.
  const double bound = 1.0 + std::max({1.0, std::abs(c1 / s.B), std::abs(c0 / s.B)});
  if (!std::isfinite(bound)) throw std::runtime_error("solve_cubic: coefficient overflow");
  const double lin_guess = (c1 != 0.0) ? c0 / c1 : 0.0;

  // g'(r) = 3B r^2 - 2B r + c1;  discriminant 4B(B - 3 c1).
  const double disc = s.B * (s.B - 3.0 * c1);
  double r;
  if (disc <= 0.0) {
    r = detail::bracketed_root(s, -bound, bound, lin_guess);
  } else {
    // Critical points 1/3 -+ sqrt(disc)/(3B), computed without cancellation.
    const double sq = std::sqrt(disc);
    const double q = s.B + sq;  // = 3B * r_hi
    const double r_hi = q / (3.0 * s.B);
    const double r_lo = c1 / q;  // product of the critical points is c1/(3B)
    const double local_max = cubic_value(s, std::min(r_lo, r_hi));
    const double left = std::min(r_lo, r_hi);
    const double right = std::max(r_lo, r_hi);
    if (local_max >= 0.0) {
      r = detail::bracketed_root(s, -bound, left, lin_guess);
    } else {
      r = detail::bracketed_root(s, right, bound, lin_guess);
    }
  }
  if (!std::isfinite(r)) throw std::runtime_error("solve_cubic: no real root found");
  // Newton stops within an ulp or two; keep the neighbour with the smallest
  // residual.
  double best = r, best_g = std::abs(cubic_value(s, r));
  double lo = r, hi = r;
  for (int k = 0; k < 3 && best_g > 0.0; ++k) {
    lo = std::nextafter(lo, -INFINITY);
    hi = std::nextafter(hi, INFINITY);
    for (double c : {lo, hi}) {
      const double gc = std::abs(cubic_value(s, c));
      if (gc < best_g) best = c, best_g = gc;
    }
  }
  return best;
}

/// Closed form of the first-order auxiliary update and its field.
inline std::pair<double, ScalarFieldHat> step_ms1o_embedded(const StageData& s) {
  const double r1 = (s.C - s.A + s.B) / (1.0 + s.B);
  ScalarFieldHat omega1 = s.u1;
  omega1.axpy(-(1.0 - r1), s.u2);
  return {r1, std::move(omega1)};
}

/// Stepper owning the scheme parameters and the phi multipliers of the last
/// step size used.
class EtdMrSav {
 public:
  EtdMrSav(GridPtr grid, SchemeParams params) : grid_(std::move(grid)), params_(std::move(params)) {
    params_.validate();
  }

  const SchemeParams& params() const noexcept { return params_; }
  const GridPtr& grid() const noexcept { return grid_; }

  /// Stage for an explicit extrapolated field omega~.
  StageData stage_from(const ScalarFieldHat& omega_n, const ScalarFieldHat& omega_tilde, double r_n,
                       double t_n, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("compute_stage: tau must be positive");
    refresh(tau);
    StageData s;
    s.u1 = phi0_.apply(omega_n);
    ScalarFieldHat f = params_.forcing.at(t_n + 0.5 * tau);
    phi1_.apply_in_place(f, tau);
    s.u1 += f;
    s.u1.coeffs()[0] = 0.0;
    s.u2 = advection(omega_tilde);
    phi1_.apply_in_place(s.u2, tau);
    s.A = inner(s.u1, s.u2);
    s.B = l2_norm_sq(s.u2);
    s.C = phi0(tau * params_.gamma) * r_n;
    return s;
  }

  StageData compute_stage(const SolverState& state, double tau) {
    const ScalarFieldHat tilde =
        extrapolate_midpoint(state.omega_prev, state.omega_curr, state.tau_prev, tau);
    return stage_from(state.omega_curr, tilde, state.r, state.t, tau);
  }

  /// Second-order step; the embedded first-order pair is filled in as well.
  StepResult step_ms2o(const SolverState& state, double tau) {
    return finish(state, compute_stage(state, tau), tau, /*advance_second_order=*/true);
  }

  /// Standalone first-order trajectory: the state advances with (omega1, r1).
  StepResult step_ms1o(const SolverState& state, double tau) {
    return finish(state, compute_stage(state, tau), tau, /*advance_second_order=*/false);
  }

  /// One MS2o-structured step from omega0 with omega~ = omega0 and r^0 = 0.
  SolverState bootstrap(const ScalarFieldHat& omega0, double tau1, double t0 = 0.0) {
    SolverState start;
    start.omega_prev = omega0;
    start.omega_curr = omega0;
    start.r = 0.0;
    start.t = t0;
    start.tau_prev = tau1;
    start.step_index = 0;
    StageData s = stage_from(omega0, omega0, 0.0, t0, tau1);
    return finish(start, std::move(s), tau1, true).state;
  }

 private:
  void refresh(double tau) {
    if (tau == cached_tau_) return;
    phi0_ = make_diagonal(grid_, tau, params_.nu, PhiKind::phi0);
    phi1_ = make_diagonal(grid_, tau, params_.nu, PhiKind::phi1);
    cached_tau_ = tau;
  }

  StepResult finish(const SolverState& state, StageData s, double tau, bool advance_second_order) {
    StepResult out;
    out.r2 = solve_cubic(s);
    out.omega2 = s.u1;
    out.omega2.axpy(-(1.0 - out.r2 * out.r2), s.u2);
    auto [r1, omega1] = step_ms1o_embedded(s);
    out.r1 = r1;
    out.omega1 = std::move(omega1);

    out.state.omega_prev = state.omega_curr;
    out.state.omega_curr = advance_second_order ? out.omega2 : out.omega1;
    out.state.r = advance_second_order ? out.r2 : out.r1;
    out.state.t = state.t + tau;
    out.state.tau_prev = tau;
    out.state.step_index = state.step_index + 1;
    out.stage = std::move(s);
    return out;
  }

  GridPtr grid_;
  SchemeParams params_;
  double cached_tau_ = -1.0;
  DiagonalOp phi0_, phi1_;
};

/// Residual of the defining relation r = C + (1 - r)(A - (1 - r^2) B).
inline double defining_relation_residual(const StageData& s, double r) {
  return r - (s.C + (1.0 - r) * (s.A - (1.0 - r * r) * s.B));
}

}  // namespace etdsav
