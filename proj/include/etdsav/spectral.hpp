#pragma once

// Differential and nonlinear operators of the vorticity-streamfunction
// system on the periodic box:
//
//   omega_t + u . grad(omega) = nu * Lap(omega) + f,   Lap(psi) = omega,
//   u = perp_grad(psi) = (d_y psi, -d_x psi).
//
// With these operators omega = d_y u - d_x v, i.e. the negative of the usual
// curl z-component.

#include <cmath>
#include <complex>
#include <stdexcept>

#include "etdsav/grid.hpp"

namespace etdsav {

namespace detail {
inline void require_same_grid(const ScalarFieldHat& a, const ScalarFieldHat& b, const char* who) {
  if (!a.same_grid(b)) throw std::invalid_argument(std::string(who) + ": grid mismatch");
}
inline constexpr complex I{0.0, 1.0};
}  // namespace detail

/// psi_hat = -omega_hat / |k|^2, psi_hat(0) = 0.
inline ScalarFieldHat poisson_solve(const ScalarFieldHat& omega) {
  const auto& g = omega.grid();
  ScalarFieldHat psi(omega.grid_ptr());
  const auto k2 = g.k2();
  auto in = omega.coeffs();
  auto out = psi.coeffs();
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = -in[i] / k2[i];
  return psi;
}

/// Inverse of poisson_solve: Lap(psi).
inline ScalarFieldHat laplacian(const ScalarFieldHat& psi) {
  ScalarFieldHat out(psi.grid_ptr());
  const auto k2 = psi.grid().k2();
  auto in = psi.coeffs();
  auto o = out.coeffs();
  for (std::size_t i = 1; i < o.size(); ++i) o[i] = -k2[i] * in[i];
  return out;
}

inline ScalarFieldHat d_dx(const ScalarFieldHat& f) {
  ScalarFieldHat out(f.grid_ptr());
  const auto dkx = f.grid().dkx();
  auto in = f.coeffs();
  auto o = out.coeffs();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = detail::I * dkx[i] * in[i];
  return out;
}

inline ScalarFieldHat d_dy(const ScalarFieldHat& f) {
  ScalarFieldHat out(f.grid_ptr());
  const auto dky = f.grid().dky();
  auto in = f.coeffs();
  auto o = out.coeffs();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = detail::I * dky[i] * in[i];
  return out;
}

/// (u, v) = (d_y psi, -d_x psi).
inline VelocityHat perp_gradient(const ScalarFieldHat& psi) {
  VelocityHat vel{d_dy(psi), d_dx(psi)};
  vel.v *= -1.0;
  return vel;
}

inline VelocityHat velocity_from_vorticity(const ScalarFieldHat& omega) {
  return perp_gradient(poisson_solve(omega));
}

inline ScalarFieldHat divergence(const VelocityHat& w) {
  detail::require_same_grid(w.u, w.v, "divergence");
  return d_dx(w.u) + d_dy(w.v);
}

/// Largest |i k . w_hat(k)| over the modes, relative to max |k| |w_hat(k)|.
inline double divergence_defect(const VelocityHat& w) {
  const auto& g = w.u.grid();
  const auto dkx = g.dkx();
  const auto dky = g.dky();
  auto u = w.u.coeffs();
  auto v = w.v.coeffs();
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    worst = std::max(worst, std::abs(dkx[i] * u[i] + dky[i] * v[i]));
    scale = std::max(scale, std::sqrt(dkx[i] * dkx[i] + dky[i] * dky[i]) *
                                std::max(std::abs(u[i]), std::abs(v[i])));
  }
  return scale > 0.0 ? worst / scale : worst;
}

/// Leray projection P w = w - grad(Lap^{-1} div w), modewise
/// w_hat - (k . w_hat) k / |k|^2.  Modes with no representable
/// derivative (pure Nyquist) are removed.
inline VelocityHat leray_project(const VelocityHat& w) {
  detail::require_same_grid(w.u, w.v, "leray_project");
  const auto& g = w.u.grid();
  const auto dkx = g.dkx();
  const auto dky = g.dky();
  VelocityHat out{ScalarFieldHat(w.u.grid_ptr()), ScalarFieldHat(w.u.grid_ptr())};
  auto u = w.u.coeffs();
  auto v = w.v.coeffs();
  auto pu = out.u.coeffs();
  auto pv = out.v.coeffs();
  for (std::size_t i = 1; i < u.size(); ++i) {
    const double kk = dkx[i] * dkx[i] + dky[i] * dky[i];
    if (kk == 0.0) continue;
    const complex kw = (dkx[i] * u[i] + dky[i] * v[i]) / kk;
    pu[i] = u[i] - kw * dkx[i];
    pv[i] = v[i] - kw * dky[i];
  }
  return out;
}

/// L2(Omega) inner product via Parseval: (2 pi)^2 sum Re(f_hat conj(g_hat)).
inline double inner(const ScalarFieldHat& f, const ScalarFieldHat& g) {
  detail::require_same_grid(f, g, "inner");
  const auto w = f.grid().parseval_weight();
  auto a = f.coeffs();
  auto b = g.coeffs();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += w[i] * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
  }
  return box_area * sum;
}

inline double l2_norm_sq(const ScalarFieldHat& f) {
  const auto w = f.grid().parseval_weight();
  auto a = f.coeffs();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += w[i] * std::norm(a[i]);
  return box_area * sum;
}

inline double l2_norm(const ScalarFieldHat& f) { return std::sqrt(l2_norm_sq(f)); }

inline double l2_norm_sq(const VelocityHat& w) { return l2_norm_sq(w.u) + l2_norm_sq(w.v); }

/// ||u||^2 for u = perp_grad(Lap^{-1} omega), i.e. (2 pi)^2 sum |omega_hat|^2 / |k|^2.
inline double velocity_norm_sq(const ScalarFieldHat& omega) {
  const auto& g = omega.grid();
  const auto w = g.parseval_weight();
  const auto k2 = g.k2();
  auto a = omega.coeffs();
  double sum = 0.0;
  for (std::size_t i = 1; i < a.size(); ++i) sum += w[i] * std::norm(a[i]) / k2[i];
  return box_area * sum;
}

/// Trapezoidal quadrature of f^2 on the physical grid (independent check of
/// the Parseval norm).
inline double quadrature_norm_sq(std::span<const double> values, int n) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  const double h = two_pi / n;
  return sum * h * h;
}

/// Vorticity forcing d_y f1 - d_x f2 of a vector force (f1, f2).
inline ScalarFieldHat curl_forcing(const ScalarFieldHat& f1, const ScalarFieldHat& f2) {
  detail::require_same_grid(f1, f2, "curl_forcing");
  ScalarFieldHat out = d_dy(f1) - d_dx(f2);
  out.coeffs()[0] = 0.0;
  return out;
}

/// Zeroes every coefficient outside the 2/3-rule mask and the mean mode.
inline void apply_dealias(ScalarFieldHat& f) {
  const auto& mask = f.grid().dealias_mask();
  auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!mask[i]) c[i] = 0.0;
  }
  c[0] = 0.0;
}

/// Pseudospectral u . grad(omega) with u = perp_grad(Lap^{-1} omega), the
/// product formed on the collocation grid, dealiased with the 2/3 rule and
/// projected onto the zero-mean space.
inline ScalarFieldHat advection(const ScalarFieldHat& omega) {
  const auto& g = omega.grid();
  const std::size_t ns = g.spectral_size();
  const std::size_t np = g.physical_size();
  const auto k2 = g.k2();
  const auto dkx = g.dkx();
  const auto dky = g.dky();
  auto w = omega.coeffs();

  CoeffArray su(ns), sv(ns), swx(ns), swy(ns);
  su[0] = sv[0] = swx[0] = swy[0] = 0.0;
  for (std::size_t i = 1; i < ns; ++i) {
    const complex psi = -w[i] / k2[i];
    su[i] = detail::I * dky[i] * psi;
    sv[i] = -detail::I * dkx[i] * psi;
    swx[i] = detail::I * dkx[i] * w[i];
    swy[i] = detail::I * dky[i] * w[i];
  }
  RealArray u(np), v(np), wx(np), wy(np);
  g.to_physical_destructive(su, u);
  g.to_physical_destructive(sv, v);
  g.to_physical_destructive(swx, wx);
  g.to_physical_destructive(swy, wy);
  for (std::size_t j = 0; j < np; ++j) u[j] = u[j] * wx[j] + v[j] * wy[j];

  ScalarFieldHat out(omega.grid_ptr());
  CoeffArray& c = out.raw();
  g.to_spectral_unscaled(u, c);
  const double scale = 1.0 / static_cast<double>(np);
  const auto& mask = g.dealias_mask();
  for (std::size_t i = 0; i < ns; ++i) c[i] = mask[i] ? c[i] * scale : complex(0.0, 0.0);
  c[0] = 0.0;
  return out;
}

}  // namespace etdsav
