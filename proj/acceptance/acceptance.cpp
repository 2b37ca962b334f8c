// Acceptance suite: one PASS/FAIL line per criterion.  With no arguments all
// criteria run; otherwise only the numbers given.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cubic_oracle.hpp"
#include "etdsav/etdsav.hpp"
#include "phi_oracle.hpp"
#include "test_util.hpp"

using namespace etdsav;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    add(std::string(ok ? "" : "!") + what);
  }
  void add(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// Empirical order from the last three points of a sweep.
double tail_order(const std::vector<double>& taus, const std::vector<double>& errs) {
  const std::size_t n = taus.size();
  std::vector<double> t(taus.end() - static_cast<long>(std::min<std::size_t>(3, n)), taus.end());
  std::vector<double> e(errs.end() - static_cast<long>(std::min<std::size_t>(3, n)), errs.end());
  return estimate_order(t, e);
}

// ---------------------------------------------------------------------------
// Criteria 1 and 2: convergence sweeps on Example 1 at 128^2.

const ScalarFieldHat& example1_ref() {
  static const ScalarFieldHat ref = [] {
    const ConvergenceSetup cs = uniform_convergence_setup();
    return example1_reference(make_grid(cs.n), cs);
  }();
  return ref;
}

void check_sweep(const ConvergenceSetup& cs, bool variable, Verdict& v) {
  const auto rows = run_convergence(cs, &example1_ref());
  for (SchemeKind scheme : cs.schemes) {
    std::vector<double> taus, eu, ew, er;
    for (const auto& r : rows) {
      if (r.scheme != scheme) continue;
      taus.push_back(variable ? cs.T / r.tau_or_N : r.tau_or_N);
      eu.push_back(r.err_velocity_L2);
      ew.push_back(r.err_vorticity_L2);
      er.push_back(r.err_r_abs);
    }
    const double su = estimate_order(taus, eu), sw = estimate_order(taus, ew), sr = estimate_order(taus, er);
    const std::string name = to_string(scheme);
    if (scheme == SchemeKind::ms2o) {
      v.require(su >= 1.8 && su <= 2.2, name + " velocity slope " + num(su));
      v.require(sw >= 1.8 && sw <= 2.2, name + " vorticity slope " + num(sw));
      v.add(name + " r slope " + num(sr) + " (reported)");
    } else {
      v.require(su >= 0.8 && su <= 1.2, name + " velocity slope " + num(su));
      v.require(sw >= 0.8 && sw <= 1.2, name + " vorticity slope " + num(sw));
      v.require(sr >= 0.8, name + " r slope " + num(sr));
      v.add(name + " small-step velocity slope " + num(tail_order(taus, eu)));
    }
  }
}

Verdict criterion1() {
  Verdict v;
  const auto t0 = Clock::now();
  check_sweep(uniform_convergence_setup(), false, v);
  const double s = seconds_since(t0);
  v.require(s <= 600.0, "runtime " + num(s) + " s");
  return v;
}

Verdict criterion2() {
  Verdict v;
  check_sweep(variable_convergence_setup(), true, v);
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 3: scalar phi functions.

Verdict criterion3() {
  Verdict v;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::vector<double> zs;
  for (int i = 0; i < 10000; ++i) zs.push_back(u(rng));
  for (double e = -12.0; e <= 1.7; e += 0.1) zs.push_back(std::pow(10.0, e));
  zs.push_back(0.0);
  zs.push_back(50.0);
  std::sort(zs.begin(), zs.end());
  double worst_id = 0.0;
  // Bounds carry one rounding of slack: for z > 37 1/phi1 rounds to z itself.
  bool bounds = true, monotone = true;
  double prev0 = 2.0, prev1 = 2.0, prev_z = -1.0;
  for (double z : zs) {
    const double p0 = phi0(z), p1 = phi1(z);
    worst_id = std::max(worst_id, std::abs(z * p1 + p0 - 1.0));
    bounds = bounds && p0 >= 0.0 && p0 <= 1.0 && p1 > 0.0 && p1 <= 1.0;
    bounds = bounds && 1.0 + z / 2.0 <= (1.0 / p1) * (1.0 + 1e-15) && 1.0 / p1 <= (1.0 + z) * (1.0 + 1e-15) &&
             (1.0 / p1) * (1.0 + 1e-15) >= z;
    if (z > prev_z) monotone = monotone && p0 <= prev0 && p1 <= prev1;
    prev0 = p0, prev1 = p1, prev_z = z;
  }
  v.require(worst_id <= 1e-14, "identity residual " + num(worst_id));
  v.require(bounds, "bounds");
  v.require(monotone, "monotone");
  std::uniform_real_distribution<double> lz(-16.0, -4.0);
  double worst_taylor = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double z = std::pow(10.0, lz(rng));
    const double o = static_cast<double>(etdsav::testing::phi1_oracle(z));
    worst_taylor = std::max(worst_taylor, std::abs(phi1(z) - o));
  }
  v.require(worst_taylor <= 1e-13, "small-z deviation " + num(worst_taylor));
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 4: modewise operator identities on random fields.

Verdict criterion4() {
  Verdict v;
  auto g = make_grid(32);
  const double pairs[][2] = {{1e-4, 1e-4}, {1e-3, 1e-2}, {1e-2, 1e-4}, {1e-2, 0.05}, {0.1, 0.025},
                             {0.1, 1.0},   {1.0, 0.025}, {1.0, 1.0},   {10.0, 0.1},  {10.0, 10.0}};
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto h = etdsav::testing::random_field(g, 1 + static_cast<int>(seed % 15), 1000 + seed);
    const double hl2 = l2_norm_sq(h);
    for (const auto& p : pairs) {
      const double tn = p[0] * p[1];
      const OperatorNorms o = operator_norms(h, p[0], p[1]);
      const double scale = o.h_sq + tn * o.grad_sq;
      worst = std::max(worst, std::abs(o.h_sq - hl2) / hl2);
      worst = std::max(worst, std::abs(o.h_sq - tn * o.phi1_grad_sq - o.phi0_sq) / o.h_sq);
      worst = std::max(worst, (o.phi1_sq - o.h_sq) / o.h_sq);
      worst = std::max(worst, (o.h_sq + 0.5 * tn * o.grad_sq - o.phi1_inverse_sq) / scale);
      worst = std::max(worst, (o.phi1_inverse_sq - o.h_sq - tn * o.grad_sq) / scale);
      worst = std::max(worst, (tn * o.grad_sq - o.phi1_inverse_sq) / scale);
    }
  }
  v.require(worst <= 1e-12, "worst relative violation " + num(worst));
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 5: cubic solver.

Verdict criterion5() {
  Verdict v;
  std::mt19937_64 rng(5);
  double worst_res = 0.0, worst_oracle = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const StageData s = etdsav::testing::random_cubic(rng);
    const double r = solve_cubic(s);
    worst_res = std::max(worst_res, std::abs(cubic_value(s, r)) / cubic_tolerance(s));
    const double o = etdsav::testing::smallest_root_oracle(s);
    worst_oracle = std::max(worst_oracle, std::abs(r - o) / std::max(1.0, std::abs(o)));
  }
  v.require(worst_res <= 1.0, "worst residual / tolerance " + num(worst_res));
  v.require(worst_oracle <= 1e-10, "oracle deviation " + num(worst_oracle));
  StageData three;
  three.A = 0.0, three.B = 4.0, three.C = 4.0;
  const double r = solve_cubic(three);
  v.require(std::abs(r + 0.5) <= 1e-15, "(0,4,4) root " + num(r));
  return v;
}

// ---------------------------------------------------------------------------
// Long-run helpers: 64^2 modes for everything past the convergence study.

constexpr int long_n = 64;
constexpr double noise_norm = 1e-10;

Problem kolmogorov_start(const GridPtr& g, int m, double nu, std::uint64_t seed) {
  Problem p = setup_kolmogorov(g, m, nu, true);
  p.omega0 += symmetry_breaking_noise(g, noise_norm, seed);
  return p;
}

// Criterion 6: energy inequality under the monitor.
Verdict criterion6() {
  Verdict v;
  auto g = make_grid(long_n);
  const Problem p = kolmogorov_start(g, 4, 1.0 / 40.0, 6);
  struct Case {
    const char* name;
    double tau;
    long steps;
  };
  for (const Case& c : {Case{"tau=0.01 T=50", 0.01, 5000}, Case{"tau=1", 1.0, 5000}, Case{"tau=10", 10.0, 500}}) {
    LongRunSpec spec;
    spec.scheme = SchemeKind::ms2o;
    spec.gamma = 1000.0;
    spec.tau = c.tau;
    spec.T = c.tau * static_cast<double>(c.steps);
    TimeSeries ts;
    try {
      const LongRunResult res = run_long(g, p, spec, ts);
      v.require(res.max_energy <= res.energy_ceiling && static_cast<long>(ts.rows.size()) == c.steps,
                std::string(c.name) + " max E " + num(res.max_energy) + " ceiling " + num(res.energy_ceiling));
    } catch (const StabilityViolation& e) {
      v.require(false, std::string(c.name) + ": " + e.what());
    }
  }
  return v;
}

// Criterion 7: the steady Kolmogorov flow stays put.
Verdict criterion7() {
  Verdict v;
  auto g = make_grid(long_n);
  const Problem p = setup_kolmogorov(g, 2, 1.0 / 20.0, false);
  LongRunSpec spec;
  spec.scheme = SchemeKind::ms2o;
  spec.gamma = 1000.0;
  spec.tau = 0.01;
  spec.T = 10.0;
  TimeSeries ts;
  run_long(g, p, spec, ts);
  const double e0 = l2_norm(p.omega0);
  double drift = 0.0;
  for (const auto& r : ts.rows) drift = std::max(drift, std::abs(r.enstrophy - e0) / e0);
  v.require(drift <= 1e-8, "enstrophy drift " + num(drift));
  return v;
}

// Criterion 8: adaptive MS12 from a point near the attractor.
Verdict criterion8() {
  Verdict v;
  auto g = make_grid(long_n);
  const double nu = 1.0 / 20.0, gamma = 1000.0, T = 40.0;
  const AttractorStart as = attractor_start(g, 2, nu, gamma, 8, 0.0025, 20.0, 60.0, noise_norm);
  Problem p = setup_kolmogorov(g, 2, nu, true);
  p.omega0 = as.omega;
  LongRunSpec spec;
  spec.scheme = SchemeKind::ms12;
  spec.gamma = gamma;
  spec.T = T;
  spec.adaptive = AdaptiveParams{};
  TimeSeries ts;
  const LongRunResult res = run_long(g, p, spec, ts);
  double worst_u = 0.0, worst_q = 0.0;
  for (const auto& r : ts.rows) {
    if (!r.accepted) continue;
    worst_u = std::max(worst_u, r.e_u);
    worst_q = std::max(worst_q, r.e_q);
  }
  v.require(worst_u <= 1e-4 && worst_q <= 1e-4, "max e_u " + num(worst_u) + ", max e_q " + num(worst_q));
  const long fixed = std::lround(T / 0.0025);
  v.require(res.accepted_steps <= 0.7 * fixed,
            "accepted " + std::to_string(res.accepted_steps) + " vs fixed " + std::to_string(fixed) +
                ", rejections " + std::to_string(res.rejections));
  Etdrk4 rk(g, nu, Forcing::constant(p.forcing));
  const double tau_ref = 0.0025 / 4.0;
  const long steps = std::lround(T / tau_ref);
  ScalarFieldHat w = as.omega;
  for (long k = 0; k < steps; ++k) w = rk.step(w, static_cast<double>(k) * tau_ref, tau_ref);
  const double err = l2_norm(res.omega - w) / l2_norm(w);
  v.require(err <= 5e-4, "final relative error " + num(err));
  v.add("start drawn at t = " + num(as.t_drawn));
  return v;
}

// ---------------------------------------------------------------------------
// Criteria 9 and 10 share the m = 4 adaptive run.

constexpr double stats_T = 2000.0;
constexpr double stats_window = 100.0;

const TimeSeries& ms12_long_series() {
  static const TimeSeries ts = [] {
    auto g = make_grid(long_n);
    const Problem p = kolmogorov_start(g, 4, 1.0 / 40.0, 9);
    LongRunSpec spec;
    spec.scheme = SchemeKind::ms12;
    spec.gamma = 1000.0;
    spec.T = stats_T;
    spec.adaptive = AdaptiveParams{};
    TimeSeries out;
    run_long(g, p, spec, out);
    return out;
  }();
  return ts;
}

struct Window {
  std::vector<double> t, tau, enstrophy;
};

Window tail(const TimeSeries& ts, double start) {
  Window w;
  for (const auto& r : ts.rows) {
    if (!r.accepted || r.t < start) continue;
    w.t.push_back(r.t);
    w.tau.push_back(r.tau);
    w.enstrophy.push_back(r.enstrophy);
  }
  return w;
}

Verdict criterion9() {
  Verdict v;
  const auto t0 = Clock::now();
  const TimeSeries& ts = ms12_long_series();
  const Window w = tail(ts, stats_window);
  const double c = pcc(w.tau, w.enstrophy);
  v.require(c <= -0.4, "PCC " + num(c));
  v.add("accepted " + std::to_string(ts.accepted_steps()) + ", " + num(seconds_since(t0)) + " s");
  return v;
}

Verdict criterion10() {
  Verdict v;
  const TimeSeries& adaptive = ms12_long_series();
  const auto t0 = Clock::now();
  auto g = make_grid(long_n);
  const Problem p = kolmogorov_start(g, 4, 1.0 / 40.0, 9);
  LongRunSpec spec;
  spec.scheme = SchemeKind::ms2o;
  spec.gamma = 1000.0;
  spec.T = stats_T;
  spec.tau = 1e-3;
  TimeSeries fixed;
  run_long(g, p, spec, fixed);
  const double dt = 0.05;
  const Window a = tail(adaptive, stats_window), b = tail(fixed, stats_window);
  const auto sa = resample_uniform(a.t, a.enstrophy, a.t.front(), a.t.back(), dt);
  const auto sb = resample_uniform(b.t, b.enstrophy, b.t.front(), b.t.back(), dt);
  const auto edges = pooled_edges(sa, sb, 64);
  const double tv = tv_distance(enstrophy_pdf(sa, edges), enstrophy_pdf(sb, edges));
  const MeanStd ma = mean_std(sa), mb = mean_std(sb);
  v.require(tv <= 0.1, "TV " + num(tv));
  v.add("mean " + num(ma.mean) + " vs " + num(mb.mean) + ", std " + num(ma.std) + " vs " + num(mb.std) + ", " +
        num(seconds_since(t0)) + " s");
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 11: Leray projection.

Verdict criterion11() {
  Verdict v;
  auto g = make_grid(32);
  double idem = 0.0, grad = 0.0, div = 0.0, keep = 0.0;
  using etdsav::testing::max_abs;
  using etdsav::testing::max_abs_diff;
  using etdsav::testing::random_field;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const VelocityHat w{random_field(g, 12, 3 * seed), random_field(g, 12, 3 * seed + 1)};
    const VelocityHat pw = leray_project(w);
    const VelocityHat ppw = leray_project(pw);
    idem = std::max(idem, std::max(max_abs_diff(ppw.u, pw.u), max_abs_diff(ppw.v, pw.v)));
    div = std::max(div, max_abs(divergence(pw)));
    const ScalarFieldHat q = random_field(g, 12, 3 * seed + 2);
    const VelocityHat pg = leray_project(VelocityHat{d_dx(q), d_dy(q)});
    grad = std::max(grad, std::max(max_abs(pg.u), max_abs(pg.v)));
    const VelocityHat sol = perp_gradient(q);
    const VelocityHat ps = leray_project(sol);
    keep = std::max(keep, std::max(max_abs_diff(ps.u, sol.u), max_abs_diff(ps.v, sol.v)));
  }
  v.require(idem <= 1e-13, "idempotence " + num(idem));
  v.require(grad <= 1e-13, "gradient residue " + num(grad));
  v.require(div <= 1e-13, "divergence after projection " + num(div));
  v.require(keep <= 1e-13, "divergence-free field changed by " + num(keep));
  return v;
}

// Criterion 12: identical inputs give identical bytes.
Verdict criterion12() {
  Verdict v;
  auto once = [](SchemeKind scheme) {
    auto g = make_grid(32);
    const Problem p = kolmogorov_start(g, 4, 1.0 / 40.0, 12);
    LongRunSpec spec;
    spec.scheme = scheme;
    spec.gamma = 1000.0;
    spec.T = 2.0;
    spec.tau = 0.01;
    if (scheme == SchemeKind::ms12) spec.adaptive = AdaptiveParams{};
    TimeSeries ts;
    run_long(g, p, spec, ts);
    std::ostringstream out;
    write_timeseries(ts, out);
    return out.str();
  };
  for (SchemeKind s : {SchemeKind::ms12, SchemeKind::ms2o}) {
    const std::string a = once(s), b = once(s);
    v.require(a == b && !a.empty(), to_string(s) + " csv " + std::to_string(a.size()) + " bytes");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria = {
      criterion1, criterion2, criterion3, criterion4,  criterion5,  criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11, criterion12};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    wanted.insert(k);
  }
  bool all = true;
  for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
    if (!wanted.empty() && !wanted.count(k)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[k - 1]();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    all = all && v.pass;
    std::printf("%s %d %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", k, v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
