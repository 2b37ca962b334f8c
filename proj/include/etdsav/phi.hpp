#pragma once

// Exponential-integrator weights phi0(z) = exp(-z), phi1(z) = (1 - exp(-z))/z
// as scalars and as diagonal Fourier multipliers phi(tau * nu * |k|^2).

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "etdsav/grid.hpp"

namespace etdsav {

enum class PhiKind { phi0, phi1, phi1_inverse };

/// Below this argument phi1 switches to its Taylor polynomial.
inline constexpr double phi1_taylor_switch = 1e-5;

inline double phi0(double z) { return std::exp(-z); }

inline double phi1(double z) {
  if (z <= phi1_taylor_switch) return 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
  return -std::expm1(-z) / z;
}

inline double phi_scalar(PhiKind kind, double z) {
  if (!std::isfinite(z) || z < 0.0) {
    throw std::invalid_argument("phi_scalar: argument must be finite and >= 0, got " +
                                std::to_string(z));
  }
  switch (kind) {
    case PhiKind::phi0:
      return phi0(z);
    case PhiKind::phi1:
      return phi1(z);
    case PhiKind::phi1_inverse:
      return 1.0 / phi1(z);
  }
  throw std::invalid_argument("phi_scalar: unknown kind");
}

/// Per-mode multiplier phi(tau * nu * |k|^2).
class DiagonalOp {
 public:
  DiagonalOp() = default;
  DiagonalOp(GridPtr grid, std::vector<double> multipliers)
      : grid_(std::move(grid)), multipliers_(std::move(multipliers)) {
    if (!grid_ || multipliers_.size() != grid_->spectral_size()) {
      throw std::invalid_argument("DiagonalOp: multiplier count does not match grid");
    }
  }

  const SpectralGrid& grid() const { return *grid_; }
  std::span<const double> multipliers() const noexcept { return multipliers_; }

  ScalarFieldHat apply(const ScalarFieldHat& f) const {
    ScalarFieldHat out = f;
    apply_in_place(out);
    return out;
  }

  void apply_in_place(ScalarFieldHat& f, double scale = 1.0) const {
    if (f.grid().n() != grid_->n()) throw std::invalid_argument("DiagonalOp::apply: grid mismatch");
    auto c = f.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= scale * multipliers_[i];
  }

 private:
  GridPtr grid_;
  std::vector<double> multipliers_;
};

inline DiagonalOp make_diagonal(const GridPtr& grid, double tau, double nu, PhiKind kind) {
  if (!(tau > 0.0) || !(nu > 0.0)) {
    throw std::invalid_argument("make_diagonal: tau and nu must be positive");
  }
  const auto k2 = grid->k2();
  std::vector<double> m(k2.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = phi_scalar(kind, tau * nu * k2[i]);
  return DiagonalOp(grid, std::move(m));
}

/// Diagonal operator with explicit multipliers (identity when all ones).
inline DiagonalOp make_identity(const GridPtr& grid) {
  return DiagonalOp(grid, std::vector<double>(grid->spectral_size(), 1.0));
}

inline ScalarFieldHat apply(const DiagonalOp& op, const ScalarFieldHat& f) { return op.apply(f); }

/// Norm pieces entering the operator estimates for a zero-mean field h at
/// step tau and viscosity nu, all evaluated modewise with z = tau*nu*|k|^2:
///   h_sq              = ||h||^2
///   grad_sq           = ||L^{1/2} h||^2
///   phi1_grad_sq      = ||phi1^{1/2} L^{1/2} h||^2
///   phi0_sq           = ||phi0^{1/2} h||^2
///   phi1_sq           = ||phi1^{1/2} h||^2
///   phi1_inverse_sq   = ||phi1^{-1/2} h||^2
struct OperatorNorms {
  double h_sq = 0.0;
  double grad_sq = 0.0;
  double phi1_grad_sq = 0.0;
  double phi0_sq = 0.0;
  double phi1_sq = 0.0;
  double phi1_inverse_sq = 0.0;
};

inline OperatorNorms operator_norms(const ScalarFieldHat& h, double tau, double nu) {
  const auto& g = h.grid();
  const auto k2 = g.k2();
  const auto w = g.parseval_weight();
  auto c = h.coeffs();
  OperatorNorms out;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double a = w[i] * std::norm(c[i]);
    const double z = tau * nu * k2[i];
    const double p0 = phi0(z);
    const double p1 = phi1(z);
    out.h_sq += a;
    out.grad_sq += k2[i] * a;
    out.phi1_grad_sq += p1 * k2[i] * a;
    out.phi0_sq += p0 * a;
    out.phi1_sq += p1 * a;
    out.phi1_inverse_sq += a / p1;
  }
  out.h_sq *= box_area;
  out.grad_sq *= box_area;
  out.phi1_grad_sq *= box_area;
  out.phi0_sq *= box_area;
  out.phi1_sq *= box_area;
  out.phi1_inverse_sq *= box_area;
  return out;
}

}  // namespace etdsav
