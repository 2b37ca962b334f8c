#include <gtest/gtest.h>

#include <cmath>

#include "etdsav/adaptive.hpp"
#include "etdsav/harness.hpp"
#include "test_util.hpp"

using namespace etdsav;
using etdsav::testing::random_field;

namespace {

StepResult pair_result(const ScalarFieldHat& w1, const ScalarFieldHat& w2, double r2) {
  StepResult r;
  r.omega1 = w1;
  r.omega2 = w2;
  r.r2 = r2;
  return r;
}

// A perturbed Kolmogorov state a few steps into a run.
struct Recorded {
  GridPtr grid;
  Problem problem;
  SolverState state;
};

Recorded recorded_state() {
  Recorded rec;
  rec.grid = make_grid(32);
  rec.problem = setup_kolmogorov(rec.grid, 4, 1.0 / 40.0, true);
  EtdMrSav s(rec.grid, SchemeParams{rec.problem.nu, 1000.0, Forcing::constant(rec.problem.forcing)});
  rec.state = s.bootstrap(rec.problem.omega0, 0.005);
  for (int k = 0; k < 5; ++k) rec.state = s.step_ms2o(rec.state, 0.005).state;
  return rec;
}

}  // namespace

TEST(Indicators, Examples) {
  auto g = make_grid(16);
  const auto w = random_field(g, 4, 1);
  EXPECT_EQ(error_indicators(pair_result(w, w, 0.3)).e_u, 0.0);
  EXPECT_EQ(error_indicators(pair_result(w, w, 0.0)).e_q, 0.0);
  EXPECT_NEAR(error_indicators(pair_result(w, 2.0 * w, 0.0)).e_u, 0.5, 1e-15);
  EXPECT_NEAR(error_indicators(pair_result(w, w, 0.25), AuxIndicator::literal_unit).e_q, 0.75, 0.0);
  EXPECT_NEAR(error_indicators(pair_result(w, w, -0.25)).e_q, 0.25, 0.0);
}

TEST(UpdateStep, Examples) {
  AdaptiveParams p;
  EXPECT_NEAR(update_step(1e-4, 1e-5, 0.01, p), 0.0095, 1e-17);
  // 0.95 * 2 * 0.01 = 0.019 before the clamp.
  AdaptiveParams wide = p;
  wide.tau_max = 1.0;
  EXPECT_NEAR(update_step(2.5e-5, 1e-9, 0.01, wide), 0.019, 1e-16);
  EXPECT_EQ(update_step(2.5e-5, 1e-9, 0.01, p), 0.01);
  EXPECT_EQ(update_step(0.0, 0.0, 0.001, p), p.tau_max);
  EXPECT_EQ(update_step(1.0, 1.0, 0.001, p), p.tau_min);
}

TEST(AdaptiveParams, Validation) {
  AdaptiveParams p;
  EXPECT_NO_THROW(p.validate());
  p.rho = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = AdaptiveParams{};
  p.tau_min = 0.1;
  p.tau_max = 0.01;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(AdaptiveAdvance, PassesFirstTry) {
  Recorded rec = recorded_state();
  EtdMrSav s(rec.grid, SchemeParams{rec.problem.nu, 1000.0, Forcing::constant(rec.problem.forcing)});
  AdaptiveParams ap;
  ap.tol_u = 1.0;
  ap.tol_q = 1.0;
  const AdaptiveStep st = adaptive_advance(s, rec.state, ap, 0.005);
  EXPECT_TRUE(st.diag.accepted);
  EXPECT_EQ(st.diag.rejections, 0);
  EXPECT_TRUE(st.rejected.empty());
  EXPECT_FALSE(st.diag.safeguard);
  EXPECT_EQ(st.diag.tau_used, 0.005);
}

TEST(AdaptiveAdvance, ExactlyOneRejection) {
  Recorded rec = recorded_state();
  EtdMrSav s(rec.grid, SchemeParams{rec.problem.nu, 1000.0, Forcing::constant(rec.problem.forcing)});
  const double tau = 0.01;
  const double e_full = error_indicators(s.step_ms2o(rec.state, tau)).e_u;
  // e_u need not shrink at exactly tau / 2; use the first fraction that does.
  double frac = 0.0, e_small = 0.0;
  for (double f : {0.5, 0.25, 0.1, 0.05}) {
    const double e = error_indicators(s.step_ms2o(rec.state, f * tau)).e_u;
    if (e < e_full) {
      frac = f;
      e_small = e;
      break;
    }
  }
  ASSERT_GT(frac, 0.0);
  AdaptiveParams ap;
  ap.tol_u = std::sqrt(e_full * e_small);
  ap.tol_q = 1.0;
  ap.tau_max = 1.0;
  // Choose rho so the retry lands on frac * tau.
  ap.rho = frac / std::sqrt(ap.tol_u / e_full);
  ASSERT_LE(ap.rho, 1.0);
  const AdaptiveStep st = adaptive_advance(s, rec.state, ap, tau);
  EXPECT_EQ(st.diag.rejections, 1);
  ASSERT_EQ(st.rejected.size(), 1u);
  EXPECT_EQ(st.rejected[0].tau_used, tau);
  EXPECT_NEAR(st.diag.tau_used, frac * tau, 1e-15);
  EXPECT_LE(st.diag.e_u, ap.tol_u);
  EXPECT_FALSE(st.diag.safeguard);
}

TEST(AdaptiveAdvance, SafeguardAtTauMin) {
  Recorded rec = recorded_state();
  EtdMrSav s(rec.grid, SchemeParams{rec.problem.nu, 1000.0, Forcing::constant(rec.problem.forcing)});
  AdaptiveParams ap;
  ap.tol_u = 1e-300;
  ap.tol_q = 1e-300;
  const AdaptiveStep st = adaptive_advance(s, rec.state, ap, ap.tau_min);
  EXPECT_TRUE(st.diag.accepted);
  EXPECT_TRUE(st.diag.safeguard);
  EXPECT_FALSE(st.diag.warning.empty());
  EXPECT_EQ(st.diag.tau_used, ap.tau_min);
  EXPECT_EQ(st.diag.rejections, 0);
}

TEST(AdaptiveAdvance, RetryLimitFallsBackToTauMin) {
  Recorded rec = recorded_state();
  EtdMrSav s(rec.grid, SchemeParams{rec.problem.nu, 1000.0, Forcing::constant(rec.problem.forcing)});
  AdaptiveParams ap;
  ap.tol_u = 1e-20;
  ap.tol_q = 1e-20;
  ap.rho = 1.0;
  ap.tau_min = 1e-15;
  ap.max_rejects = 1;
  const AdaptiveStep st = adaptive_advance(s, rec.state, ap, 0.005);
  ASSERT_EQ(st.rejected.size(), 1u);
  // The retry stays above the floor, so the fallback comes from the limit.
  EXPECT_GT(st.rejected[0].tau_next, ap.tau_min);
  EXPECT_EQ(st.diag.rejections, 1);
  EXPECT_EQ(st.diag.tau_used, ap.tau_min);
  EXPECT_TRUE(st.diag.safeguard);
}
