#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "etdsav/harness.hpp"
#include "etdsav/stability.hpp"

using namespace etdsav;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(Theta, Examples) {
  EXPECT_EQ(theta(1.0 / 20.0, 1.0, 1000.0), 1.0 / 20.0);
  EXPECT_EQ(theta(1.0 / 40.0, 1.0, 1000.0), 1.0 / 40.0);
  EXPECT_EQ(theta(10.0, 1.0, 2.0), 2.0);
  EXPECT_THROW(theta(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(Energy, Examples) {
  auto g = make_grid(16);
  EXPECT_EQ(energy(ScalarFieldHat::zeros(g), 0.0).E, 1.0);
  EXPECT_EQ(energy(ScalarFieldHat::zeros(g), -1.0).E, 0.0);
  const auto c = ScalarFieldHat::from_function(g, [](double x, double) { return std::cos(x); });
  EXPECT_NEAR(energy(c, 0.0).E, 2 * pi * pi + 1.0, 1e-12);
}

TEST(OneStep, Examples) {
  const double nu = 0.1, gamma = 5.0, tau = 0.2;
  const double E0 = 3.0;
  const double th = theta(nu, 1.0, gamma);
  // Zero forcing contributes only the gamma term.
  const double decay = std::exp(-th * tau) * E0;
  EXPECT_TRUE(check_onestep(E0, decay, tau, 0.0, nu, 1.0, gamma));
  const double at_bound = onestep_bound(E0, tau, 0.0, nu, 1.0, gamma);
  EXPECT_TRUE(check_onestep(E0, at_bound, tau, 0.0, nu, 1.0, gamma));
  EXPECT_FALSE(check_onestep(E0, at_bound + 1e-3 * E0, tau, 0.0, nu, 1.0, gamma));
}

TEST(OneStep, RecordedKolmogorovStep) {
  auto g = make_grid(32);
  const auto p = setup_kolmogorov(g, 4, 1.0 / 40.0, true);
  EtdMrSav s(g, SchemeParams{p.nu, 1000.0, Forcing::constant(p.forcing)});
  SolverState st = s.bootstrap(p.omega0, 0.01);
  const double F2 = l2_norm_sq(p.forcing);
  for (int k = 0; k < 10; ++k) {
    const StepResult res = s.step_ms2o(st, 0.01);
    EXPECT_TRUE(check_onestep(energy(st.omega_curr, st.r).E, energy(res.state.omega_curr, res.state.r).E,
                              0.01, F2, p.nu, 1.0, 1000.0));
    st = res.state;
  }
}

TEST(GlobalBound, Examples) {
  EXPECT_NEAR(global_bound(5.0, 0.0, 0.0, 0.5, 1.0, 2.0), 5.0 + 2.0 / 0.5, 1e-15);
  const double asym = global_bound(7.0, 1e6, 3.0, 0.5, 1.0, 2.0);
  EXPECT_NEAR(asym, (3.0 / 0.5 + 2.0) / 0.5, 1e-12);
  const double F2 = 32.0 * pi * pi;
  const double k = global_bound(0.0, 0.0, F2, 1.0 / 40.0, 1.0, 1000.0);
  EXPECT_NEAR(k, 40.0 * (F2 * 40.0 + 1000.0), 1e-6);
  EXPECT_NEAR(k, 5.453e5, 1e2);
}

TEST(Monitor, DetectsViolation) {
  auto g = make_grid(16);
  const auto c = ScalarFieldHat::from_function(g, [](double x, double) { return std::cos(x); });
  StabilityMonitor m(0.1, 1.0);
  m.start(c, 0.0, 0.0);
  EXPECT_NO_THROW(m.record(0.5 * c, 0.0, 0.1, 0.1, 0.0));
  EXPECT_THROW(m.record(100.0 * c, 0.0, 0.2, 0.1, 0.0), StabilityViolation);
  EXPECT_THROW(StabilityMonitor(0.1, 1.0).record(c, 0.0, 0.1, 0.1, 0.0), std::logic_error);
}
