#pragma once

// Embedded 1-2 step-size controller: the first- and second-order solutions
// share one stage, their difference drives the step update
//
//   tau_new = rho * sqrt(min(tol_u / e_u, tol_q / e_q)) * tau,
//
// clamped to [tau_min, tau_max].

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "etdsav/scheme.hpp"

namespace etdsav {

/// How the auxiliary indicator e_q is measured.
enum class AuxIndicator {
  deviation,     ///< |r^{n+1}|, distance from the mean-reversion target 0
  literal_unit,  ///< |r^{n+1} - 1|
};

struct AdaptiveParams {
  double rho = 0.95;
  double tol_u = 1e-4;
  double tol_q = 1e-4;
  double tau_min = 1e-5;
  double tau_max = 1e-2;
  int max_rejects = 50;
  AuxIndicator aux_indicator = AuxIndicator::deviation;

  void validate() const {
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("AdaptiveParams: rho must lie in (0, 1]");
    if (!(tol_u > 0.0) || !(tol_q > 0.0)) throw std::invalid_argument("AdaptiveParams: tolerances must be positive");
    if (!(tau_min > 0.0) || !(tau_min <= tau_max)) {
      throw std::invalid_argument("AdaptiveParams: need 0 < tau_min <= tau_max");
    }
    if (max_rejects < 1) throw std::invalid_argument("AdaptiveParams: max_rejects must be >= 1");
  }
};

struct StepDiagnostics {
  double e_u = 0.0;
  double e_q = 0.0;
  bool accepted = false;
  int rejections = 0;
  double tau_used = 0.0;
  double tau_next = 0.0;
  bool safeguard = false;  // accepted without meeting the tolerances
  std::string warning;
};

struct ErrorIndicators {
  double e_u = 0.0;
  double e_q = 0.0;
};

inline ErrorIndicators error_indicators(const StepResult& result,
                                        AuxIndicator mode = AuxIndicator::deviation) {
  ErrorIndicators e;
  const double denom = std::max({l2_norm(result.omega1), l2_norm(result.omega2), 1e-300});
  e.e_u = l2_norm(result.omega1 - result.omega2) / denom;
  e.e_q = mode == AuxIndicator::deviation ? std::abs(result.r2) : std::abs(result.r2 - 1.0);
  return e;
}

inline double update_step(double e_u, double e_q, double tau, const AdaptiveParams& p) {
  if (!(tau > 0.0)) throw std::invalid_argument("update_step: tau must be positive");
  constexpr double floor = 1e-16;
  const double ratio = std::min(p.tol_u / std::max(e_u, floor), p.tol_q / std::max(e_q, floor));
  const double proposed = p.rho * std::sqrt(ratio) * tau;
  return std::clamp(proposed, p.tau_min, p.tau_max);
}

struct AdaptiveStep {
  StepResult result;
  StepDiagnostics diag;
  /// Trial steps that failed the tolerance test, in order.
  std::vector<StepDiagnostics> rejected;
};

/// Advances one accepted step from `state`, retrying with smaller steps on
/// rejection.  A step that still fails at tau_min, or after max_rejects
/// retries, is accepted at tau_min and flagged.
inline AdaptiveStep adaptive_advance(EtdMrSav& scheme, const SolverState& state,
                                     const AdaptiveParams& ap, double tau_suggest) {
  ap.validate();
  double tau = std::clamp(tau_suggest, ap.tau_min, ap.tau_max);
  AdaptiveStep out;
  int rejections = 0;
  while (true) {
    StepResult res = scheme.step_ms2o(state, tau);
    const ErrorIndicators e = error_indicators(res, ap.aux_indicator);
    StepDiagnostics d;
    d.e_u = e.e_u;
    d.e_q = e.e_q;
    d.tau_used = tau;
    d.rejections = rejections;
    const bool pass = e.e_u <= ap.tol_u && e.e_q <= ap.tol_q;
    const bool at_floor = tau <= ap.tau_min;
    if (pass || at_floor || rejections >= ap.max_rejects) {
      if (!pass && !at_floor) {
        // Out of retries: take the step at tau_min instead.
        tau = ap.tau_min;
        res = scheme.step_ms2o(state, tau);
        const ErrorIndicators ef = error_indicators(res, ap.aux_indicator);
        d.e_u = ef.e_u;
        d.e_q = ef.e_q;
        d.tau_used = tau;
      }
      d.accepted = true;
      d.safeguard = !(d.e_u <= ap.tol_u && d.e_q <= ap.tol_q);
      if (d.safeguard) {
        d.warning = "tolerance not met at tau = " + std::to_string(tau) +
                    " (e_u = " + std::to_string(d.e_u) + ", e_q = " + std::to_string(d.e_q) + ")";
      }
      d.tau_next = update_step(d.e_u, d.e_q, tau, ap);
      out.result = std::move(res);
      out.diag = std::move(d);
      return out;
    }
    const double retry = update_step(e.e_u, e.e_q, tau, ap);
    d.tau_next = retry;
    out.rejected.push_back(d);
    ++rejections;
    tau = retry;
  }
}

}  // namespace etdsav
