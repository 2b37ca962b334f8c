#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "etdsav/harness.hpp"
#include "etdsav/scheme.hpp"
#include "cubic_oracle.hpp"
#include "test_util.hpp"

using namespace etdsav;
using etdsav::testing::max_abs;
using etdsav::testing::max_abs_diff;
using etdsav::testing::random_field;
using etdsav::testing::smallest_root_oracle;

namespace {

StageData abc(double A, double B, double C) {
  StageData s;
  s.A = A;
  s.B = B;
  s.C = C;
  return s;
}

}  // namespace

TEST(Extrapolation, Examples) {
  auto g = make_grid(16);
  const auto prev = random_field(g, 4, 1);
  const auto curr = random_field(g, 4, 2);
  const auto uni = extrapolate_midpoint(prev, curr, 0.1, 0.1);
  EXPECT_LE(max_abs_diff(uni, 1.5 * curr - 0.5 * prev), 1e-15);
  const auto dbl = extrapolate_midpoint(prev, curr, 0.1, 0.2);
  EXPECT_LE(max_abs_diff(dbl, 2.0 * curr - prev), 1e-15);
  // Exact on linear functions: Psi(t) = t times a fixed field.
  const auto p0 = 0.0 * curr;
  const auto p1 = 1.0 * curr;
  EXPECT_LE(max_abs_diff(extrapolate_midpoint(p0, p1, 1.0, 1.0), 1.5 * curr), 1e-15);
  EXPECT_THROW(extrapolate_midpoint(prev, curr, 0.0, 1.0), std::invalid_argument);
}

TEST(Stage, HomogeneousAndScalar) {
  auto g = make_grid(32);
  const double nu = 1.0 / 20.0, gamma = 1000.0;
  const auto p = setup_kolmogorov(g, 2, nu, false);
  EtdMrSav s(g, SchemeParams{nu, gamma, Forcing::constant(p.forcing)});
  const StageData st = s.stage_from(p.omega0, p.omega0, 0.0, 0.0, 0.01);
  EXPECT_LE(max_abs(st.u2), 1e-12 * max_abs(p.omega0));
  EXPECT_NEAR(st.A, 0.0, 1e-12);
  EXPECT_NEAR(st.B, 0.0, 1e-20);

  const auto c = ScalarFieldHat::from_function(g, [](double x, double) { return std::cos(x); });
  EtdMrSav heat(g, SchemeParams{1.0, 0.5, Forcing::none(g)});
  const StageData sh = heat.stage_from(c, c, 0.3, 0.0, 1.0);
  EXPECT_LE(max_abs_diff(sh.u1, std::exp(-1.0) * c), 1e-16);
  EXPECT_NEAR(sh.C, 0.3 * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(sh.C, 0.181959, 1e-6);
}

TEST(Cubic, Fixtures) {
  EXPECT_EQ(solve_cubic(abc(0, 0, 0.3)), 0.3);
  const StageData three = abc(0, 4, 4);
  EXPECT_NEAR(solve_cubic(three), -0.5, 1e-15);
  EXPECT_NEAR(smallest_root_oracle(three), -0.5, 1e-12);
  const StageData one = abc(0.01, 0.0001, 0.05);
  EXPECT_NEAR(solve_cubic(one), smallest_root_oracle(one), 1e-10);
}

TEST(Cubic, RandomResidualAndOracle) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const StageData s = etdsav::testing::random_cubic(rng);
    const double r = solve_cubic(s);
    EXPECT_LE(std::abs(cubic_value(s, r)), cubic_tolerance(s)) << s.A << " " << s.B << " " << s.C;
    const double oracle = smallest_root_oracle(s);
    EXPECT_NEAR(r, oracle, 1e-10 * std::max(1.0, std::abs(oracle))) << s.A << " " << s.B << " " << s.C;
  }
}

TEST(Cubic, LargeRootsStillSmallest) {
  // Tiny B with 1 + A - B < 0: roots near 0 and +-sqrt(|c1|/B).
  const StageData s = abc(-1.5, 1e-8, 0.2);
  const double r = solve_cubic(s);
  EXPECT_LT(r, -1000.0);
  EXPECT_NEAR(r, smallest_root_oracle(s), 1e-10 * std::abs(r));
}

TEST(Cubic, RejectsInvalid) {
  EXPECT_THROW(solve_cubic(abc(0, -1, 0)), std::runtime_error);
  EXPECT_THROW(solve_cubic(abc(NAN, 0, 0)), std::runtime_error);
}

TEST(Ms1oEmbedded, Examples) {
  auto g = make_grid(16);
  StageData s = abc(0, 0, 0.3);
  s.u1 = random_field(g, 4, 1);
  s.u2 = ScalarFieldHat::zeros(g);
  auto [r, w] = step_ms1o_embedded(s);
  EXPECT_EQ(r, 0.3);
  EXPECT_EQ(max_abs_diff(w, s.u1), 0.0);
  s.A = 0.02;
  s.B = 0.01;
  s.C = 0.1;
  auto [r2, w2] = step_ms1o_embedded(s);
  EXPECT_NEAR(r2, 0.09 / 1.01, 1e-16);
  EXPECT_NEAR(r2, 0.0891089, 1e-7);
  EXPECT_EQ(max_abs_diff(w2, s.u1), 0.0);
}

TEST(Step, ZeroStateStaysZero) {
  auto g = make_grid(16);
  EtdMrSav s(g, SchemeParams{0.1, 10.0, Forcing::none(g)});
  SolverState st = s.bootstrap(ScalarFieldHat::zeros(g), 0.1);
  EXPECT_EQ(st.r, 0.0);
  EXPECT_EQ(max_abs(st.omega_curr), 0.0);
  for (int k = 0; k < 5; ++k) {
    const StepResult res = s.step_ms2o(st, 0.1);
    EXPECT_EQ(res.r2, 0.0);
    st = res.state;
  }
  EXPECT_EQ(max_abs(st.omega_curr), 0.0);
}

TEST(Step, SteadyKolmogorovFixedPoint) {
  auto g = make_grid(32);
  const double nu = 1.0 / 20.0, gamma = 1000.0;
  const auto p = setup_kolmogorov(g, 2, nu, false);
  EtdMrSav s(g, SchemeParams{nu, gamma, Forcing::constant(p.forcing)});
  SolverState st = s.bootstrap(p.omega0, 0.01);
  EXPECT_LE(l2_norm(st.omega_curr - p.omega0), 1e-10 * l2_norm(p.omega0));
  st.r = 0.25;
  for (double tau : {0.01, 0.1, 1.0}) {
    const StepResult res = s.step_ms2o(st, tau);
    EXPECT_LE(l2_norm(res.omega2 - p.omega0), 1e-10 * l2_norm(p.omega0));
    EXPECT_NEAR(res.r2, std::exp(-tau * gamma) * st.r, 1e-14);
  }
}

TEST(Step, DefiningRelationAndStructure) {
  auto g = make_grid(32);
  const auto p = setup_kolmogorov(g, 4, 1.0 / 40.0, true);
  EtdMrSav s(g, SchemeParams{p.nu, 1000.0, Forcing::constant(p.forcing)});
  const auto w0 = p.omega0 + random_field(g, 8, 3);
  SolverState st = s.bootstrap(w0, 0.01);
  for (int k = 0; k < 20; ++k) {
    const StepResult res = s.step_ms2o(st, k % 2 ? 0.01 : 0.013);
    const StageData& sd = res.stage;
    EXPECT_LE(std::abs(defining_relation_residual(sd, res.r2)), 1e-12 * std::max(1.0, std::abs(sd.C)));
    ScalarFieldHat expected2 = sd.u1;
    expected2.axpy(-(1.0 - res.r2 * res.r2), sd.u2);
    EXPECT_EQ(max_abs_diff(res.omega2, expected2), 0.0);
    ScalarFieldHat expected1 = sd.u1;
    expected1.axpy(-(1.0 - res.r1), sd.u2);
    EXPECT_EQ(max_abs_diff(res.omega1, expected1), 0.0);
    EXPECT_GE(sd.B, 0.0);
    EXPECT_TRUE(res.state.omega_curr.has_zero_mean());
    st = res.state;
  }
  EXPECT_EQ(st.step_index, 21);
}

TEST(Step, DefiningRelationRoughState) {
  // B near 1.5e3 and r near -1: g'(r) is about 5B, so an absolute 1e-12 is
  // below what a double root can give.  Bound by the size of the terms instead.
  auto g = make_grid(32);
  const auto p = setup_kolmogorov(g, 4, 1.0 / 40.0, true);
  EtdMrSav s(g, SchemeParams{p.nu, 1000.0, Forcing::constant(p.forcing)});
  SolverState st = s.bootstrap(p.omega0 + 10.0 * random_field(g, 8, 3), 0.01);
  for (int k = 0; k < 20; ++k) {
    const StepResult res = s.step_ms2o(st, k % 2 ? 0.01 : 0.013);
    const StageData& sd = res.stage;
    const double r = res.r2;
    const double scale = sd.B * (std::abs(r * r * r) + r * r) + std::abs(1.0 + sd.A - sd.B) * std::abs(r) +
                         std::abs(sd.A - sd.B + sd.C);
    EXPECT_GT(sd.B, 100.0);
    EXPECT_LE(std::abs(defining_relation_residual(sd, r)), 8 * std::numeric_limits<double>::epsilon() * scale);
    st = res.state;
  }
}

TEST(Bootstrap, Examples) {
  auto g = make_grid(16);
  EtdMrSav zero(g, SchemeParams{0.5, 1.0, Forcing::none(g)});
  const SolverState z = zero.bootstrap(ScalarFieldHat::zeros(g), 0.1);
  EXPECT_EQ(z.r, 0.0);
  EXPECT_EQ(max_abs(z.omega_curr), 0.0);
  EXPECT_EQ(z.tau_prev, 0.1);
  EXPECT_EQ(z.step_index, 1);

  const auto c = ScalarFieldHat::from_function(g, [](double x, double) { return std::cos(x); });
  EtdMrSav heat(g, SchemeParams{0.5, 1.0, Forcing::none(g)});
  const SolverState h = heat.bootstrap(c, 1.0);
  EXPECT_LE(max_abs_diff(h.omega_curr, std::exp(-0.5) * c), 1e-15);
  EXPECT_LE(max_abs_diff(h.omega_prev, c), 0.0);
  EXPECT_NEAR(h.t, 1.0, 0.0);
}

TEST(Params, Validation) {
  auto g = make_grid(16);
  EXPECT_THROW(EtdMrSav(g, SchemeParams{0.0, 1.0, Forcing::none(g)}), std::invalid_argument);
  EXPECT_THROW(EtdMrSav(g, SchemeParams{1.0, 0.0, Forcing::none(g)}), std::invalid_argument);
}

TEST(Forcing, TimeDependent) {
  auto g = make_grid(16);
  const auto c = ScalarFieldHat::from_function(g, [](double x, double) { return std::cos(x); });
  const Forcing f = Forcing::time_dependent([&](double t) { return t * c; });
  EXPECT_FALSE(f.is_constant());
  EXPECT_LE(max_abs_diff(f.at(2.0), 2.0 * c), 1e-16);
}
