#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "etdsav/spectral.hpp"
#include "test_util.hpp"

using namespace etdsav;
using etdsav::testing::max_abs;
using etdsav::testing::max_abs_diff;
using etdsav::testing::random_field;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(Grid, RejectsOddOrSmall) {
  EXPECT_THROW(make_grid(7), std::invalid_argument);
  EXPECT_THROW(make_grid(6), std::invalid_argument);
  EXPECT_NO_THROW(make_grid(8));
}

TEST(Grid, MaskAtEight) {
  auto g = make_grid(8);
  const auto& mask = g->dealias_mask();
  for (int iy = 0; iy < 8; ++iy) {
    for (int ix = 0; ix < g->nk(); ++ix) {
      const int kx = g->kx_of(ix), ky = g->ky_of(iy);
      const bool expected = std::abs(kx) <= 2 && std::abs(ky) <= 2;
      EXPECT_EQ(mask[g->index(iy, ix)], expected) << kx << "," << ky;
    }
  }
}

TEST(Grid, NyquistMaskedAt256) {
  auto g = make_grid(256);
  EXPECT_EQ(g->spectral_size(), 256u * 129u);
  const auto& mask = g->dealias_mask();
  for (int iy = 0; iy < 256; ++iy) EXPECT_FALSE(mask[g->index(iy, 128)]);
  for (int ix = 0; ix < g->nk(); ++ix) EXPECT_FALSE(mask[g->index(128, ix)]);
}

TEST(Grid, RoundTripBandLimited) {
  auto g = make_grid(32);
  const auto f = random_field(g, 10, 3);
  const auto back = ScalarFieldHat::from_physical(g, f.to_physical());
  EXPECT_LE(max_abs_diff(f, back), 1e-13 * max_abs(f));
  EXPECT_TRUE(back.has_zero_mean());
  EXPECT_LE(back.conjugate_symmetry_defect(), 1e-14);
}

TEST(Grid, FromPhysicalDropsMean) {
  auto g = make_grid(16);
  const auto f = ScalarFieldHat::from_function(g, [](double x, double) { return 3.0 + std::cos(x); });
  EXPECT_TRUE(f.has_zero_mean());
  EXPECT_NEAR(f.mode(1, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(f.mode(-1, 0).real(), 0.5, 1e-15);
}

TEST(Spectral, PoissonSingleModes) {
  auto g = make_grid(32);
  const auto w = ScalarFieldHat::from_function(g, [](double x, double y) { return std::cos(2 * x) * std::cos(4 * y); });
  const auto psi = poisson_solve(w);
  const auto expected = ScalarFieldHat::from_function(
      g, [](double x, double y) { return -std::cos(2 * x) * std::cos(4 * y) / 20.0; });
  EXPECT_LE(max_abs_diff(psi, expected), 1e-15);

  const int m = 3;
  const auto w2 = ScalarFieldHat::from_function(g, [&](double, double y) { return std::cos(m * y); });
  const auto e2 = ScalarFieldHat::from_function(g, [&](double, double y) { return -std::cos(m * y) / (m * m); });
  EXPECT_LE(max_abs_diff(poisson_solve(w2), e2), 1e-15);
  EXPECT_EQ(max_abs(poisson_solve(ScalarFieldHat::zeros(g))), 0.0);
}

TEST(Spectral, PerpGradient) {
  auto g = make_grid(32);
  const auto psi = ScalarFieldHat::from_function(g, [](double x, double) { return std::sin(x); });
  const auto vel = perp_gradient(psi);
  const auto ev = ScalarFieldHat::from_function(g, [](double x, double) { return -std::cos(x); });
  EXPECT_LE(max_abs(vel.u), 1e-15);
  EXPECT_LE(max_abs_diff(vel.v, ev), 1e-15);

  const double nu = 1.0 / 20.0;
  const int m = 2;
  const auto psik = ScalarFieldHat::from_function(
      g, [&](double, double y) { return -std::cos(m * y) / (nu * m * m * m); });
  const auto vk = perp_gradient(psik);
  const auto eu = ScalarFieldHat::from_function(
      g, [&](double, double y) { return std::sin(m * y) / (nu * m * m); });
  EXPECT_LE(max_abs_diff(vk.u, eu), 1e-13);
  EXPECT_LE(max_abs(vk.v), 1e-15);

  const auto zero = perp_gradient(ScalarFieldHat::zeros(g));
  EXPECT_EQ(max_abs(zero.u) + max_abs(zero.v), 0.0);
}

TEST(Spectral, PerpGradientDivergenceFree) {
  auto g = make_grid(32);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto psi = random_field(g, 15, seed);
    EXPECT_LE(divergence_defect(perp_gradient(psi)), 1e-13);
  }
}

TEST(Spectral, AdvectionSteadyKolmogorovVanishes) {
  auto g = make_grid(64);
  const double nu = 1.0 / 20.0;
  const int m = 2;
  const auto w = ScalarFieldHat::from_function(g, [&](double, double y) { return std::cos(m * y) / (nu * m); });
  EXPECT_LE(l2_norm(advection(w)), 1e-13 * l2_norm(w));
}

TEST(Spectral, AdvectionHandDerived) {
  auto g = make_grid(32);
  const auto psi = ScalarFieldHat::from_function(
      g, [](double x, double y) { return std::sin(x) + std::sin(2 * y); });
  const auto w = laplacian(psi);
  const auto expected = ScalarFieldHat::from_function(
      g, [](double x, double y) { return 6.0 * std::cos(x) * std::cos(2 * y); });
  EXPECT_LE(max_abs_diff(advection(w), expected), 1e-13);
}

// Physical-space oracle: u . grad(omega) from analytic derivatives at the
// collocation points.
TEST(Spectral, AdvectionQuadratureOracle) {
  auto g = make_grid(32);
  // psi = sin(x) cos(y) + 0.5 cos(2x + y)
  auto psi_fn = [](double x, double y) { return std::sin(x) * std::cos(y) + 0.5 * std::cos(2 * x + y); };
  const auto psi = ScalarFieldHat::from_function(g, psi_fn);
  const auto w = laplacian(psi);
  const auto adv = advection(w).to_physical();
  double worst = 0.0, scale = 0.0;
  for (int iy = 0; iy < 32; ++iy) {
    for (int ix = 0; ix < 32; ++ix) {
      const double x = g->x(ix), y = g->y(iy);
      const double psi_x = std::cos(x) * std::cos(y) - std::sin(2 * x + y);
      const double psi_y = -std::sin(x) * std::sin(y) - 0.5 * std::sin(2 * x + y);
      // omega = -2 sin x cos y - 2.5 cos(2x + y)
      const double w_x = -2 * std::cos(x) * std::cos(y) + 5.0 * std::sin(2 * x + y);
      const double w_y = 2 * std::sin(x) * std::sin(y) + 2.5 * std::sin(2 * x + y);
      const double u = psi_y, v = -psi_x;
      double b = u * w_x + v * w_y;
      scale = std::max(scale, std::abs(b));
      worst = std::max(worst, std::abs(adv[iy * 32 + ix] - b));
    }
  }
  EXPECT_LE(worst, 1e-12 * std::max(1.0, scale));
}

TEST(Spectral, AdvectionSingleModeVanishes) {
  auto g = make_grid(32);
  const auto w = ScalarFieldHat::from_function(g, [](double x, double) { return std::cos(x); });
  EXPECT_LE(max_abs(advection(w)), 1e-15);
}

TEST(Spectral, AdvectionMaskedAndSkew) {
  auto g = make_grid(48);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    // kmax = 7 keeps quadratic products inside the mask |k| < 16.
    const auto w = random_field(g, 7, seed);
    const auto b = advection(w);
    EXPECT_TRUE(b.has_zero_mean());
    const auto& mask = g->dealias_mask();
    auto c = b.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!mask[i]) {
        EXPECT_EQ(c[i], complex(0.0, 0.0));
      }
    }
    const double grad = std::sqrt(l2_norm_sq(d_dx(w)) + l2_norm_sq(d_dy(w)));
    EXPECT_LE(std::abs(inner(b, w)), 1e-10 * l2_norm(w) * grad);
  }
}

TEST(Spectral, LerayExamples) {
  auto g = make_grid(32);
  VelocityHat grad_q{ScalarFieldHat::from_function(g, [](double x, double) { return std::cos(x); }),
                     ScalarFieldHat::zeros(g)};
  const auto p = leray_project(grad_q);
  EXPECT_LE(max_abs(p.u) + max_abs(p.v), 1e-16);

  VelocityHat mixed{ScalarFieldHat::from_function(g, [](double x, double y) { return std::cos(y) + std::cos(x); }),
                    ScalarFieldHat::zeros(g)};
  const auto pm = leray_project(mixed);
  const auto cy = ScalarFieldHat::from_function(g, [](double, double y) { return std::cos(y); });
  EXPECT_LE(max_abs_diff(pm.u, cy), 1e-16);
  EXPECT_LE(max_abs(pm.v), 1e-16);

  const auto df = perp_gradient(random_field(g, 10, 9));
  const auto pd = leray_project(df);
  EXPECT_LE(max_abs_diff(pd.u, df.u), 1e-14 * max_abs(df.u));
  EXPECT_LE(max_abs_diff(pd.v, df.v), 1e-14 * max_abs(df.v));
}

// Brute-force oracle: project one mode at a time with explicit k-vectors.
TEST(Spectral, LerayBruteForce) {
  auto g = make_grid(16);
  VelocityHat w{random_field(g, 6, 1), random_field(g, 6, 2)};
  const auto p = leray_project(w);
  for (int ky = -6; ky <= 6; ++ky) {
    for (int kx = 0; kx <= 6; ++kx) {
      if (kx == 0 && ky == 0) continue;
      const complex u = w.u.mode(kx, ky), v = w.v.mode(kx, ky);
      const double kk = kx * kx + ky * ky;
      const complex dot = (double(kx) * u + double(ky) * v) / kk;
      EXPECT_LE(std::abs(p.u.mode(kx, ky) - (u - dot * double(kx))), 1e-15);
      EXPECT_LE(std::abs(p.v.mode(kx, ky) - (v - dot * double(ky))), 1e-15);
    }
  }
}

TEST(Spectral, NormsAgainstAnalyticAndQuadrature) {
  auto g = make_grid(32);
  const auto c = ScalarFieldHat::from_function(g, [](double x, double) { return std::cos(x); });
  EXPECT_NEAR(l2_norm_sq(c), 2 * pi * pi, 1e-12);
  EXPECT_EQ(l2_norm(ScalarFieldHat::zeros(g)), 0.0);
  const auto f4 = ScalarFieldHat::from_function(g, [](double, double y) { return 4.0 * std::cos(4 * y); });
  EXPECT_NEAR(l2_norm_sq(f4), 32 * pi * pi, 1e-11);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = random_field(g, 15, seed);
    const double q = quadrature_norm_sq(f.to_physical(), 32);
    EXPECT_NEAR(l2_norm_sq(f), q, 1e-12 * q);
  }
}

TEST(Spectral, VelocityNormMatchesComponents) {
  auto g = make_grid(32);
  const auto w = random_field(g, 12, 4);
  const auto vel = velocity_from_vorticity(w);
  EXPECT_NEAR(velocity_norm_sq(w), l2_norm_sq(vel), 1e-13 * l2_norm_sq(vel));
}

TEST(Spectral, CurlForcing) {
  auto g = make_grid(32);
  const auto zero = ScalarFieldHat::zeros(g);
  const auto sx = ScalarFieldHat::from_function(g, [](double x, double) { return std::sin(x); });
  const auto mcos = ScalarFieldHat::from_function(g, [](double x, double) { return -std::cos(x); });
  EXPECT_LE(max_abs_diff(curl_forcing(zero, sx), mcos), 1e-15);
  const auto sy = ScalarFieldHat::from_function(g, [](double, double y) { return std::sin(y); });
  const auto cy = ScalarFieldHat::from_function(g, [](double, double y) { return std::cos(y); });
  EXPECT_LE(max_abs_diff(curl_forcing(sy, zero), cy), 1e-15);
  EXPECT_EQ(max_abs(curl_forcing(zero, zero)), 0.0);
}

TEST(Spectral, SignConventionCurl) {
  // omega = d_y u - d_x v for u = perp_grad(psi) reproduces Lap psi.
  auto g = make_grid(32);
  const auto psi = random_field(g, 10, 12);
  const auto vel = perp_gradient(psi);
  const auto w = d_dy(vel.u) - d_dx(vel.v);
  EXPECT_LE(max_abs_diff(w, laplacian(psi)), 1e-13 * max_abs(w));
}
