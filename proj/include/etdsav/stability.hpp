#pragma once

// Runtime form of the uniform-in-time energy bound.  With
// E^n = ||omega^n||^2 + (r^n + 1)^2 and theta = min(nu * lambda1, gamma),
// every step must satisfy
//
//   E^{n+1} <= exp(-theta tau) E^n + tau (||f^{n+1/2}||^2 / (nu lambda1) + gamma)
//
// and, telescoped,
//
//   E^{n+1} <= exp(-theta (t_{n+1} - t_1)) E^1 + (||f||_inf^2 / (nu lambda1) + gamma) / theta.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "etdsav/spectral.hpp"

namespace etdsav {

/// Smallest eigenvalue of -Lap on zero-mean fields of the (0, 2 pi)^2 box.
inline constexpr double box_lambda1 = 1.0;

inline double theta(double nu, double lambda1, double gamma) {
  if (!(nu > 0.0) || !(lambda1 > 0.0) || !(gamma > 0.0)) {
    throw std::invalid_argument("theta: nu, lambda1 and gamma must be positive");
  }
  return std::min(nu * lambda1, gamma);
}

struct EnergyRecord {
  double t = 0.0;
  double E = 0.0;
  double field_part = 0.0;
  double aux_part = 0.0;
  double bound = 0.0;
};

inline EnergyRecord energy(const ScalarFieldHat& field, double r, double t = 0.0) {
  EnergyRecord e;
  e.t = t;
  e.field_part = l2_norm_sq(field);
  e.aux_part = (r + 1.0) * (r + 1.0);
  e.E = e.field_part + e.aux_part;
  return e;
}

inline constexpr double default_energy_slack = 1e-10;

inline double onestep_bound(double E_prev, double tau, double F_norm_sq_mid, double nu,
                            double lambda1, double gamma) {
  const double th = theta(nu, lambda1, gamma);
  return std::exp(-th * tau) * E_prev + tau * (F_norm_sq_mid / (nu * lambda1) + gamma);
}

inline bool check_onestep(double E_prev, double E_next, double tau, double F_norm_sq_mid, double nu,
                          double lambda1, double gamma, double slack = default_energy_slack) {
  if (!(tau > 0.0)) throw std::invalid_argument("check_onestep: tau must be positive");
  return E_next <= onestep_bound(E_prev, tau, F_norm_sq_mid, nu, lambda1, gamma) +
                       slack * (1.0 + E_prev);
}

inline double global_bound(double E_first, double elapsed, double F_inf_sq, double nu,
                           double lambda1, double gamma) {
  if (elapsed < 0.0) throw std::invalid_argument("global_bound: elapsed must be >= 0");
  const double th = theta(nu, lambda1, gamma);
  return std::exp(-th * elapsed) * E_first + (F_inf_sq / (nu * lambda1) + gamma) / th;
}

class StabilityViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checks both inequalities after every step of a run.  The first record
/// (the state after the bootstrap step) anchors the global bound.
class StabilityMonitor {
 public:
  StabilityMonitor(double nu, double gamma, double lambda1 = box_lambda1,
                   double slack = default_energy_slack)
      : nu_(nu), gamma_(gamma), lambda1_(lambda1), slack_(slack) {
    (void)theta(nu, lambda1, gamma);
  }

  void start(const ScalarFieldHat& omega, double r, double t) {
    last_ = energy(omega, r, t);
    first_E_ = last_.E;
    t_first_ = t;
    slack_sum_ = 0.0;
    F_inf_sq_ = 0.0;
    started_ = true;
    steps_ = 0;
    last_.bound = last_.E;
  }

  /// Records the step from the previous state to (omega, r) at time t with
  /// step tau and midpoint forcing norm ||f^{n+1/2}||^2.  Throws
  /// StabilityViolation on failure.
  const EnergyRecord& record(const ScalarFieldHat& omega, double r, double t, double tau,
                             double F_norm_sq_mid) {
    if (!started_) throw std::logic_error("StabilityMonitor: record before start");
    EnergyRecord next = energy(omega, r, t);
    F_inf_sq_ = std::max(F_inf_sq_, F_norm_sq_mid);
    const double allowance = slack_ * (1.0 + last_.E);
    const bool one_step_ok =
        check_onestep(last_.E, next.E, tau, F_norm_sq_mid, nu_, lambda1_, gamma_, slack_);
    slack_sum_ += allowance;
    next.bound = global_bound(first_E_, t - t_first_, F_inf_sq_, nu_, lambda1_, gamma_);
    const bool global_ok = next.E <= next.bound + slack_sum_;
    if (!one_step_ok || !global_ok) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "energy bound violated at t = " << t << " (step " << steps_ + 1 << ", tau = " << tau
          << "): E_prev = " << last_.E << ", E_next = " << next.E << ", one-step bound = "
          << onestep_bound(last_.E, tau, F_norm_sq_mid, nu_, lambda1_, gamma_) + allowance
          << ", global bound = " << next.bound + slack_sum_;
      throw StabilityViolation(msg.str());
    }
    last_ = next;
    ++steps_;
    return last_;
  }

  const EnergyRecord& last() const noexcept { return last_; }
  double first_energy() const noexcept { return first_E_; }
  long steps() const noexcept { return steps_; }
  /// Asymptotic ceiling (F_inf^2 / (nu lambda1) + gamma) / theta for the
  /// forcing seen so far.
  double ceiling() const { return global_bound(0.0, 0.0, F_inf_sq_, nu_, lambda1_, gamma_); }

 private:
  double nu_, gamma_, lambda1_, slack_;
  EnergyRecord last_;
  double first_E_ = 0.0;
  double t_first_ = 0.0;
  double slack_sum_ = 0.0;
  double F_inf_sq_ = 0.0;
  bool started_ = false;
  long steps_ = 0;
};

}  // namespace etdsav
