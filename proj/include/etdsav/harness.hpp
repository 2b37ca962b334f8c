#pragma once

// Experiment drivers: the two model problems, step sequences, convergence
// sweeps against an ETDRK4 reference, and long runs that record the
// time series and check the energy bound on every step.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "etdsav/adaptive.hpp"
#include "etdsav/etdrk4.hpp"
#include "etdsav/scheme.hpp"
#include "etdsav/spectral.hpp"
#include "etdsav/stability.hpp"

namespace etdsav {

enum class SchemeKind { ms1o, ms2o, ms12, etdrk4 };

inline std::string to_string(SchemeKind s) {
  switch (s) {
    case SchemeKind::ms1o: return "ms1o";
    case SchemeKind::ms2o: return "ms2o";
    case SchemeKind::ms12: return "ms12";
    case SchemeKind::etdrk4: return "etdrk4";
  }
  return "?";
}

inline SchemeKind scheme_from_string(const std::string& s) {
  if (s == "ms1o") return SchemeKind::ms1o;
  if (s == "ms2o") return SchemeKind::ms2o;
  if (s == "ms12") return SchemeKind::ms12;
  if (s == "etdrk4") return SchemeKind::etdrk4;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

// ---------------------------------------------------------------------------
// Model problems

struct Problem {
  ScalarFieldHat omega0;
  ScalarFieldHat forcing;
  double nu = 0.0;
};

/// Accuracy test: u = 0.2 sin(4y) cos(2x), v = -0.1 sin(2x) cos(4y), force
/// (0, sin x).
inline Problem setup_example1(const GridPtr& grid, double nu = 1e-4) {
  const auto u = ScalarFieldHat::from_function(
      grid, [](double x, double y) { return 0.2 * std::sin(4 * y) * std::cos(2 * x); });
  const auto v = ScalarFieldHat::from_function(
      grid, [](double x, double y) { return -0.1 * std::sin(2 * x) * std::cos(4 * y); });
  const auto f1 = ScalarFieldHat::zeros(grid);
  const auto f2 = ScalarFieldHat::from_function(grid, [](double x, double) { return std::sin(x); });
  Problem p;
  p.omega0 = d_dy(u) - d_dx(v);
  p.omega0.coeffs()[0] = 0.0;
  p.forcing = curl_forcing(f1, f2);
  p.nu = nu;
  return p;
}

/// Kolmogorov flow forced by m cos(m y).  The steady state has
/// psi = -cos(m y) / (nu m^3); the perturbed start adds 0.001 cos(m x) cos(m y)
/// to the streamfunction.
inline Problem setup_kolmogorov(const GridPtr& grid, int m, double nu, bool perturbed) {
  if (m < 1) throw std::invalid_argument("setup_kolmogorov: m must be >= 1");
  const double md = m;
  const auto psi0 = ScalarFieldHat::from_function(grid, [&](double x, double y) {
    double psi = -std::cos(md * y) / (nu * md * md * md);
    if (perturbed) psi += 0.001 * std::cos(md * x) * std::cos(md * y);
    return psi;
  });
  Problem p;
  p.omega0 = laplacian(psi0);
  p.forcing = ScalarFieldHat::from_function(grid, [&](double, double y) { return md * std::cos(md * y); });
  p.nu = nu;
  return p;
}

/// Seeded random field on the modes |kx|, |ky| <= kmax, scaled to L2 norm
/// `norm`.  The perturbed Kolmogorov start is symmetric under rotation by pi
/// and rounding keeps it so; the large-scale instability lives outside that
/// subspace and needs a nudge to appear at all.
inline ScalarFieldHat symmetry_breaking_noise(const GridPtr& grid, double norm, std::uint64_t seed,
                                              int kmax = 4) {
  ScalarFieldHat f = ScalarFieldHat::zeros(grid);
  if (norm == 0.0) return f;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int kx = 0; kx <= kmax; ++kx) {
    for (int ky = -kmax; ky <= kmax; ++ky) {
      if (kx == 0 && ky <= 0) continue;
      const double a = normal(rng), b = normal(rng);
      f.set_mode(kx, ky, complex(a, b));
    }
  }
  for (int ky = 1; ky <= kmax; ++ky) f.set_mode(0, -ky, std::conj(f.mode(0, ky)));
  f *= norm / l2_norm(f);
  return f;
}

// ---------------------------------------------------------------------------
// Step sequences

struct StepSequence {
  std::vector<double> taus;
  double total = 0.0;
};

inline StepSequence uniform_steps(long N, double T) {
  if (N < 1 || !(T > 0.0)) throw std::invalid_argument("uniform_steps: need N >= 1, T > 0");
  StepSequence s;
  s.taus.assign(static_cast<std::size_t>(N), T / static_cast<double>(N));
  s.total = T;
  return s;
}

/// tau_k = (T/N)(1 + amplitude * eps_k), eps_k ~ U[-1, 1], rescaled to sum to T.
inline StepSequence perturbed_steps(long N, double T, double amplitude, std::uint64_t seed) {
  if (N < 2) throw std::invalid_argument("perturbed_steps: N must be >= 2");
  if (!(amplitude >= 0.0 && amplitude < 1.0)) {
    throw std::invalid_argument("perturbed_steps: amplitude must lie in [0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> eps(-1.0, 1.0);
  StepSequence s;
  s.taus.resize(static_cast<std::size_t>(N));
  const double h = T / static_cast<double>(N);
  double sum = 0.0;
  for (auto& tau : s.taus) {
    tau = h * (1.0 + amplitude * eps(rng));
    sum += tau;
  }
  const double c = T / sum;
  double total = 0.0;
  for (auto& tau : s.taus) {
    tau *= c;
    total += tau;
  }
  // Absorb the rounding of the rescale into the last step.
  s.taus.back() += T - total;
  s.total = 0.0;
  for (double tau : s.taus) s.total += tau;
  return s;
}

// ---------------------------------------------------------------------------
// Fixed-sequence integration

struct FinalState {
  ScalarFieldHat omega;
  double r = 0.0;
  double t = 0.0;
};

/// Integrates `problem` with the given step sequence.  For ms1o/ms2o the
/// first step is the bootstrap step; etdrk4 carries no auxiliary variable.
inline FinalState integrate_sequence(const GridPtr& grid, const Problem& problem, double gamma,
                                     SchemeKind scheme, const StepSequence& steps) {
  if (steps.taus.empty()) throw std::invalid_argument("integrate_sequence: empty step sequence");
  FinalState out;
  if (scheme == SchemeKind::etdrk4) {
    Etdrk4 rk(grid, problem.nu, Forcing::constant(problem.forcing));
    ScalarFieldHat v = problem.omega0;
    double t = 0.0;
    for (double tau : steps.taus) {
      v = rk.step(v, t, tau);
      t += tau;
    }
    out.omega = std::move(v);
    out.t = t;
    return out;
  }
  if (scheme == SchemeKind::ms12) throw std::invalid_argument("integrate_sequence: ms12 is adaptive");
  EtdMrSav stepper(grid, SchemeParams{problem.nu, gamma, Forcing::constant(problem.forcing)});
  SolverState state = stepper.bootstrap(problem.omega0, steps.taus.front());
  for (std::size_t k = 1; k < steps.taus.size(); ++k) {
    const double tau = steps.taus[k];
    state = (scheme == SchemeKind::ms2o ? stepper.step_ms2o(state, tau) : stepper.step_ms1o(state, tau)).state;
  }
  out.omega = state.omega_curr;
  out.r = state.r;
  out.t = state.t;
  return out;
}

// ---------------------------------------------------------------------------
// Convergence studies

struct ConvergenceRow {
  SchemeKind scheme = SchemeKind::ms2o;
  double tau_or_N = 0.0;
  double err_velocity_L2 = 0.0;
  double err_vorticity_L2 = 0.0;
  double err_r_abs = 0.0;
};

struct ConvergenceSetup {
  int n = 128;
  double nu = 1e-4;
  double gamma = 100.0;
  double T = 1.0;
  double tau_ref = 0.1 / 1024.0;
  bool variable = false;
  std::vector<int> ks;  // tau = 0.1 * 2^-k, or N = 2^k when variable
  double amplitude = 0.1;
  std::uint64_t seed = 1;
  std::vector<SchemeKind> schemes{SchemeKind::ms1o, SchemeKind::ms2o};
};

inline ConvergenceSetup uniform_convergence_setup() {
  ConvergenceSetup s;
  s.ks = {0, 1, 2, 3, 4, 5, 6};
  return s;
}

inline ConvergenceSetup variable_convergence_setup() {
  ConvergenceSetup s;
  s.variable = true;
  s.ks = {5, 6, 7, 8, 9, 10};
  return s;
}

/// ETDRK4 solution of the accuracy test at T with uniform steps tau_ref.
inline ScalarFieldHat example1_reference(const GridPtr& grid, const ConvergenceSetup& cs) {
  const Problem p = setup_example1(grid, cs.nu);
  const long steps = std::lround(cs.T / cs.tau_ref);
  return integrate_sequence(grid, p, cs.gamma, SchemeKind::etdrk4, uniform_steps(steps, cs.T)).omega;
}

inline ConvergenceRow make_row(SchemeKind scheme, double label, const FinalState& fs,
                               const ScalarFieldHat& reference) {
  ConvergenceRow row;
  row.scheme = scheme;
  row.tau_or_N = label;
  const ScalarFieldHat diff = fs.omega - reference;
  row.err_vorticity_L2 = l2_norm(diff);
  row.err_velocity_L2 = std::sqrt(velocity_norm_sq(diff));
  row.err_r_abs = std::abs(fs.r);
  return row;
}

inline std::vector<ConvergenceRow> run_convergence(const ConvergenceSetup& cs,
                                                   const ScalarFieldHat* reference = nullptr) {
  const GridPtr grid = reference ? reference->grid_ptr() : make_grid(cs.n);
  const Problem p = setup_example1(grid, cs.nu);
  std::optional<ScalarFieldHat> own_ref;
  if (!reference) {
    own_ref = example1_reference(grid, cs);
    reference = &*own_ref;
  }
  std::vector<ConvergenceRow> rows;
  for (SchemeKind scheme : cs.schemes) {
    for (int k : cs.ks) {
      StepSequence seq;
      double label;
      if (cs.variable) {
        const long N = 1L << k;
        seq = perturbed_steps(N, cs.T, cs.amplitude, cs.seed + static_cast<std::uint64_t>(k));
        label = static_cast<double>(N);
      } else {
        const double tau = 0.1 * std::ldexp(1.0, -k);
        seq = uniform_steps(std::lround(cs.T / tau), cs.T);
        label = tau;
      }
      rows.push_back(make_row(scheme, label, integrate_sequence(grid, p, cs.gamma, scheme, seq), *reference));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Long runs

struct TimeSeriesRow {
  long step = 0;
  double t = 0.0;
  double tau = 0.0;
  double enstrophy = 0.0;  // ||omega||
  double r = 0.0;
  double e_u = 0.0;
  double e_q = 0.0;
  int accepted = 1;
  int rejections = 0;

  bool operator==(const TimeSeriesRow&) const = default;
};

struct TimeSeries {
  std::vector<TimeSeriesRow> rows;

  /// Accepted rows only, as separate columns.
  std::vector<double> column_t() const { return column([](const TimeSeriesRow& r) { return r.t; }); }
  std::vector<double> column_tau() const { return column([](const TimeSeriesRow& r) { return r.tau; }); }
  std::vector<double> column_enstrophy() const {
    return column([](const TimeSeriesRow& r) { return r.enstrophy; });
  }
  long accepted_steps() const {
    long c = 0;
    for (const auto& r : rows) c += r.accepted;
    return c;
  }

 private:
  template <class F>
  std::vector<double> column(F&& f) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
      if (r.accepted) out.push_back(f(r));
    }
    return out;
  }
};

struct LongRunSpec {
  SchemeKind scheme = SchemeKind::ms2o;
  double gamma = 1000.0;
  double T = 1.0;
  double tau = 0.01;                      // fixed-step schemes
  std::optional<AdaptiveParams> adaptive;  // ms12
  double tau_init = 0.0;                   // ms12 bootstrap step (0: tau_min)
  double t0 = 0.0;
  bool monitor = true;
  double lambda1 = box_lambda1;
  double snapshot_every = 0.0;
  std::function<void(const ScalarFieldHat&, double)> on_snapshot;
  /// Rejected adaptive trials are recorded as rows with accepted = 0.
  bool record_rejections = true;
};

struct LongRunResult {
  ScalarFieldHat omega;
  double r = 0.0;
  double t = 0.0;
  long accepted_steps = 0;
  long rejections = 0;
  long safeguarded_steps = 0;
  double energy_ceiling = 0.0;
  double max_energy = 0.0;
};

/// Advances `problem` (initial data at spec.t0) to t0 + T, appending one row
/// per accepted step to `series`.  Throws StabilityViolation if the energy
/// bound fails.
inline LongRunResult run_long(const GridPtr& grid, const Problem& problem, const LongRunSpec& spec,
                              TimeSeries& series) {
  if (!(spec.T > 0.0)) throw std::invalid_argument("run_long: T must be positive");
  const double t_end = spec.t0 + spec.T;
  const Forcing forcing = Forcing::constant(problem.forcing);
  const double f_norm_sq = l2_norm_sq(problem.forcing);
  LongRunResult out;

  double next_snapshot = spec.snapshot_every > 0.0 ? spec.t0 : std::numeric_limits<double>::infinity();
  auto maybe_snapshot = [&](const ScalarFieldHat& w, double t) {
    if (spec.on_snapshot && t >= next_snapshot - 1e-12) {
      spec.on_snapshot(w, t);
      while (next_snapshot <= t + 1e-12) next_snapshot += spec.snapshot_every;
    }
  };
  maybe_snapshot(problem.omega0, spec.t0);

  if (spec.scheme == SchemeKind::etdrk4) {
    if (!(spec.tau > 0.0)) throw std::invalid_argument("run_long: tau must be positive");
    Etdrk4 rk(grid, problem.nu, forcing);
    const long steps = std::max(1L, std::lround(spec.T / spec.tau));
    const double tau = spec.T / static_cast<double>(steps);
    ScalarFieldHat v = problem.omega0;
    for (long k = 0; k < steps; ++k) {
      const double t = spec.t0 + static_cast<double>(k) * tau;
      v = rk.step(v, t, tau);
      const double t_new = spec.t0 + static_cast<double>(k + 1) * tau;
      series.rows.push_back({k + 1, t_new, tau, l2_norm(v), 0.0, 0.0, 0.0, 1, 0});
      maybe_snapshot(v, t_new);
    }
    out.omega = std::move(v);
    out.t = t_end;
    out.accepted_steps = steps;
    return out;
  }

  EtdMrSav stepper(grid, SchemeParams{problem.nu, spec.gamma, forcing});
  std::optional<StabilityMonitor> monitor;
  if (spec.monitor) monitor.emplace(problem.nu, spec.gamma, spec.lambda1);

  auto record = [&](const StepResult& res, const ErrorIndicators& e, double tau, int rejections) {
    const SolverState& s = res.state;
    series.rows.push_back({s.step_index, s.t, tau, l2_norm(s.omega_curr), s.r, e.e_u, e.e_q, 1, rejections});
    if (monitor) {
      const EnergyRecord& rec = monitor->record(s.omega_curr, s.r, s.t, tau, f_norm_sq);
      out.max_energy = std::max(out.max_energy, rec.E);
    }
    maybe_snapshot(s.omega_curr, s.t);
  };

  if (spec.scheme == SchemeKind::ms12) {
    if (!spec.adaptive) throw std::invalid_argument("run_long: ms12 needs adaptive parameters");
    const AdaptiveParams& ap = *spec.adaptive;
    ap.validate();
    const double tau1 = std::min(spec.tau_init > 0.0 ? spec.tau_init : ap.tau_min, spec.T);
    SolverState state = stepper.bootstrap(problem.omega0, tau1, spec.t0);
    series.rows.push_back({1, state.t, tau1, l2_norm(state.omega_curr), state.r, 0.0, std::abs(state.r), 1, 0});
    if (monitor) {
      monitor->start(state.omega_curr, state.r, state.t);
      out.max_energy = monitor->last().E;
    }
    maybe_snapshot(state.omega_curr, state.t);
    double tau_next = tau1;
    while (state.t < t_end - 1e-12 * std::max(1.0, t_end)) {
      AdaptiveParams local = ap;
      const double remaining = t_end - state.t;
      if (remaining < local.tau_max) {
        local.tau_max = remaining;
        local.tau_min = std::min(local.tau_min, remaining);
      }
      AdaptiveStep step = adaptive_advance(stepper, state, local, tau_next);
      if (spec.record_rejections) {
        for (const auto& rj : step.rejected) {
          series.rows.push_back({state.step_index + 1, state.t + rj.tau_used, rj.tau_used, 0.0, 0.0,
                                 rj.e_u, rj.e_q, 0, rj.rejections});
        }
      }
      out.rejections += step.diag.rejections;
      out.safeguarded_steps += step.diag.safeguard ? 1 : 0;
      record(step.result, ErrorIndicators{step.diag.e_u, step.diag.e_q}, step.diag.tau_used,
             step.diag.rejections);
      state = std::move(step.result.state);
      // A truncated final step must not shrink the controller's suggestion.
      tau_next = std::clamp(step.diag.tau_next, ap.tau_min, ap.tau_max);
    }
    out.omega = state.omega_curr;
    out.r = state.r;
    out.t = state.t;
  } else {
    if (!(spec.tau > 0.0)) throw std::invalid_argument("run_long: tau must be positive");
    const long steps = std::max(1L, std::lround(spec.T / spec.tau));
    const double tau = spec.T / static_cast<double>(steps);
    SolverState state = stepper.bootstrap(problem.omega0, tau, spec.t0);
    series.rows.push_back({1, state.t, tau, l2_norm(state.omega_curr), state.r, 0.0, std::abs(state.r), 1, 0});
    if (monitor) {
      monitor->start(state.omega_curr, state.r, state.t);
      out.max_energy = monitor->last().E;
    }
    maybe_snapshot(state.omega_curr, state.t);
    for (long k = 1; k < steps; ++k) {
      StepResult res = spec.scheme == SchemeKind::ms2o ? stepper.step_ms2o(state, tau)
                                                       : stepper.step_ms1o(state, tau);
      res.state.t = spec.t0 + static_cast<double>(k + 1) * tau;
      record(res, error_indicators(res), tau, 0);
      state = std::move(res.state);
    }
    out.omega = state.omega_curr;
    out.r = state.r;
    out.t = state.t;
  }
  out.accepted_steps = series.accepted_steps();
  if (monitor) out.energy_ceiling = monitor->ceiling();
  return out;
}

/// Initial data near the attractor: integrate the perturbed Kolmogorov
/// problem with MS2o at step `tau` up to a time drawn uniformly from
/// [t_lo, t_hi] with `seed`, and return that field as the new start.
struct AttractorStart {
  ScalarFieldHat omega;
  double t_drawn = 0.0;
};

inline AttractorStart attractor_start(const GridPtr& grid, int m, double nu, double gamma,
                                      std::uint64_t seed, double tau = 0.0025, double t_lo = 20.0,
                                      double t_hi = 60.0, double noise = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pick(t_lo, t_hi);
  AttractorStart out;
  out.t_drawn = pick(rng);
  Problem p = setup_kolmogorov(grid, m, nu, true);
  p.omega0 += symmetry_breaking_noise(grid, noise, seed);
  LongRunSpec spec;
  spec.scheme = SchemeKind::ms2o;
  spec.gamma = gamma;
  spec.T = out.t_drawn;
  spec.tau = out.t_drawn / std::ceil(out.t_drawn / tau);
  spec.monitor = false;
  TimeSeries scratch;
  out.omega = run_long(grid, p, spec, scratch).omega;
  return out;
}

}  // namespace etdsav
