#pragma once

// Fourth-order exponential Runge-Kutta (Cox-Matthews form, contour-averaged
// coefficients after Kassam & Trefethen) for
//
//   omega_t = -nu L omega + N(omega, t),   N = f(t) - u . grad(omega).
//
// Used only as the high-accuracy reference solution.

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <vector>

#include "etdsav/scheme.hpp"
#include "etdsav/spectral.hpp"

namespace etdsav {

/// Per-mode scalar coefficients for decay rate z = tau * nu * lambda.
struct Etdrk4Coefficients {
  double E = 1.0;   // exp(-z)
  double E2 = 1.0;  // exp(-z/2)
  double Q = 0.0;   // tau * (exp(-z/2) - 1) / (-z)
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 0.0;
};

inline constexpr int etdrk4_contour_points = 32;

inline Etdrk4Coefficients etdrk4_coefficients(double z, double tau) {
  Etdrk4Coefficients c;
  c.E = std::exp(-z);
  c.E2 = std::exp(-0.5 * z);
  std::complex<double> q{}, a{}, b{}, d{};
  constexpr int M = etdrk4_contour_points;
  for (int j = 0; j < M; ++j) {
    const double angle = 2.0 * std::numbers::pi * (j + 0.5) / M;
    const std::complex<double> lr = std::complex<double>(-z, 0.0) + std::polar(1.0, angle);
    const std::complex<double> e = std::exp(lr);
    const std::complex<double> e2 = std::exp(0.5 * lr);
    const std::complex<double> lr3 = lr * lr * lr;
    q += (e2 - 1.0) / lr;
    a += (-4.0 - lr + e * (4.0 - 3.0 * lr + lr * lr)) / lr3;
    b += (2.0 + lr + e * (lr - 2.0)) / lr3;
    d += (-4.0 - 3.0 * lr - lr * lr + e * (4.0 - lr)) / lr3;
  }
  c.Q = tau * q.real() / M;
  c.f1 = tau * a.real() / M;
  c.f2 = tau * b.real() / M;
  c.f3 = tau * d.real() / M;
  return c;
}

struct RK4Tables {
  double tau = 0.0;
  std::vector<double> E, E2, Q, f1, f2, f3;
};

inline RK4Tables build_tables(const SpectralGrid& grid, double nu, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("build_tables: tau must be positive");
  RK4Tables t;
  t.tau = tau;
  const auto k2 = grid.k2();
  const std::size_t ns = k2.size();
  for (auto* v : {&t.E, &t.E2, &t.Q, &t.f1, &t.f2, &t.f3}) v->resize(ns);
  // Only a handful of distinct |k|^2 values occur; cache by value.
  std::map<double, Etdrk4Coefficients> seen;
  for (std::size_t i = 0; i < ns; ++i) {
    auto it = seen.find(k2[i]);
    if (it == seen.end()) it = seen.emplace(k2[i], etdrk4_coefficients(tau * nu * k2[i], tau)).first;
    const Etdrk4Coefficients& c = it->second;
    t.E[i] = c.E;
    t.E2[i] = c.E2;
    t.Q[i] = c.Q;
    t.f1[i] = c.f1;
    t.f2[i] = c.f2;
    t.f3[i] = c.f3;
  }
  return t;
}

class Etdrk4 {
 public:
  Etdrk4(GridPtr grid, double nu, Forcing forcing)
      : grid_(std::move(grid)), nu_(nu), forcing_(std::move(forcing)) {}

  const RK4Tables& tables(double tau) {
    if (tables_.tau != tau) tables_ = build_tables(*grid_, nu_, tau);
    return tables_;
  }

  ScalarFieldHat nonlinear(const ScalarFieldHat& omega, double t) const {
    ScalarFieldHat n = forcing_.at(t);
    n -= advection(omega);
    n.coeffs()[0] = 0.0;
    return n;
  }

  ScalarFieldHat step(const ScalarFieldHat& v, double t, double tau) {
    const RK4Tables& tb = tables(tau);
    return etdrk4_step(v, tb, t);
  }

  ScalarFieldHat etdrk4_step(const ScalarFieldHat& v, const RK4Tables& tb, double t) const {
    const std::size_t ns = grid_->spectral_size();
    const double tau = tb.tau;
    const ScalarFieldHat Nv = nonlinear(v, t);
    ScalarFieldHat a(grid_), b(grid_), c(grid_);
    auto vc = v.coeffs();
    auto nvc = Nv.coeffs();
    auto ac = a.coeffs();
    for (std::size_t i = 0; i < ns; ++i) ac[i] = tb.E2[i] * vc[i] + tb.Q[i] * nvc[i];
    const ScalarFieldHat Na = nonlinear(a, t + 0.5 * tau);
    auto nac = Na.coeffs();
    auto bc = b.coeffs();
    for (std::size_t i = 0; i < ns; ++i) bc[i] = tb.E2[i] * vc[i] + tb.Q[i] * nac[i];
    const ScalarFieldHat Nb = nonlinear(b, t + 0.5 * tau);
    auto nbc = Nb.coeffs();
    auto cc = c.coeffs();
    for (std::size_t i = 0; i < ns; ++i) cc[i] = tb.E2[i] * ac[i] + tb.Q[i] * (2.0 * nbc[i] - nvc[i]);
    const ScalarFieldHat Nc = nonlinear(c, t + tau);
    auto ncc = Nc.coeffs();
    ScalarFieldHat out(grid_);
    auto oc = out.coeffs();
    for (std::size_t i = 0; i < ns; ++i) {
      oc[i] = tb.E[i] * vc[i] + tb.f1[i] * nvc[i] + 2.0 * tb.f2[i] * (nac[i] + nbc[i]) +
              tb.f3[i] * ncc[i];
    }
    oc[0] = 0.0;
    return out;
  }

  /// Integrates from t0 to t0 + steps * tau.
  ScalarFieldHat integrate(ScalarFieldHat v, double t0, double tau, long steps) {
    const RK4Tables tb = tables(tau);
    for (long k = 0; k < steps; ++k) v = etdrk4_step(v, tb, t0 + static_cast<double>(k) * tau);
    return v;
  }

 private:
  GridPtr grid_;
  double nu_;
  Forcing forcing_;
  RK4Tables tables_;
};

}  // namespace etdsav
