#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "etdsav/etdsav.hpp"

namespace fs = std::filesystem;
using namespace etdsav;

namespace {

struct Flags {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
  std::vector<std::string> inputs;
  std::optional<double> window;
  double split = 17.5;
  int bins = 64;
  double dt = 0.05;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig load_config(const Flags& f) {
  RunConfig c = parse_config(slurp(f.config), f.paper_scale);
  if (!f.output.empty()) c.output_dir = f.output;
  if (f.seed) c.seed = *f.seed;
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string fmt(double x) { return detail::format_double(x); }

int cmd_run(const Flags& f) {
  const RunConfig c = load_config(f);
  if (!c.scheme) throw ConfigError("config: 'run' needs key 'scheme'");
  const fs::path out = c.output_dir;
  fs::create_directories(out);
  write_text(out / "config.resolved", format_config(c));

  const GridPtr grid = make_grid(c.n);
  Problem problem = c.problem == ProblemKind::example1 ? setup_example1(grid, c.nu)
                                                       : setup_kolmogorov(grid, c.m, c.nu, c.perturbed);
  if (c.problem == ProblemKind::kolmogorov && c.perturbed) {
    problem.omega0 += symmetry_breaking_noise(grid, c.noise, c.seed);
  }
  LongRunSpec spec;
  spec.scheme = *c.scheme;
  spec.gamma = c.gamma;
  spec.T = c.T;
  if (c.tau) spec.tau = *c.tau;
  spec.adaptive = c.adaptive;
  spec.tau_init = c.tau_init;
  spec.monitor = c.monitor;
  spec.lambda1 = c.lambda1;
  if (!c.init_snapshot.empty()) {
    const Snapshot s = read_snapshot(c.init_snapshot, grid);
    problem.omega0 = s.omega;
    spec.t0 = s.t;
  } else if (c.attractor_start) {
    if (c.problem != ProblemKind::kolmogorov) throw ConfigError("config: attractor_start needs problem = kolmogorov");
    const AttractorStart a = attractor_start(grid, c.m, c.nu, c.gamma, c.seed, 0.0025, 20.0, 60.0, c.noise);
    problem.omega0 = a.omega;
    std::cout << "attractor start drawn at t = " << fmt(a.t_drawn) << "\n";
  }
  if (c.snapshot_every > 0.0) {
    spec.snapshot_every = c.snapshot_every;
    fs::create_directories(out / "snapshots");
    spec.on_snapshot = [&, index = 0](const ScalarFieldHat& w, double t) mutable {
      char name[32];
      std::snprintf(name, sizeof name, "snap_%06d.bin", index++);
      write_snapshot(w, t, c.nu, (out / "snapshots" / name).string());
    };
  }

  TimeSeries series;
  try {
    const LongRunResult res = run_long(grid, problem, spec, series);
    write_timeseries(series, (out / "timeseries.csv").string());
    std::cout << "t_final = " << fmt(res.t) << "\n"
              << "accepted_steps = " << res.accepted_steps << "\n"
              << "rejections = " << res.rejections << "\n"
              << "safeguarded_steps = " << res.safeguarded_steps << "\n"
              << "enstrophy_final = " << fmt(l2_norm(res.omega)) << "\n";
    if (spec.monitor && spec.scheme != SchemeKind::etdrk4) {
      std::cout << "max_energy = " << fmt(res.max_energy) << "\n"
                << "energy_ceiling = " << fmt(res.energy_ceiling) << "\n";
    }
    if (res.safeguarded_steps > 0) {
      std::cerr << "warning: " << res.safeguarded_steps << " steps accepted at tau_min above tolerance\n";
    }
  } catch (const StabilityViolation& e) {
    write_timeseries(series, (out / "timeseries.csv").string());
    std::cerr << "stability violation: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cmd_converge(const Flags& f) {
  const RunConfig c = load_config(f);
  ConvergenceSetup cs = c.variable_steps ? variable_convergence_setup() : uniform_convergence_setup();
  if (c.problem != ProblemKind::example1) throw ConfigError("config: 'converge' needs problem = example1");
  cs.n = c.n;
  cs.nu = c.nu;
  cs.gamma = c.gamma;
  cs.T = c.T;
  cs.tau_ref = c.tau_ref;
  cs.amplitude = c.step_amplitude;
  cs.seed = c.seed;
  if (c.k_min || c.k_max) {
    const int lo = c.k_min.value_or(cs.ks.front());
    const int hi = c.k_max.value_or(cs.ks.back());
    if (hi - lo < 2) throw ConfigError("config: need k_max - k_min >= 2 for a slope");
    cs.ks.clear();
    for (int k = lo; k <= hi; ++k) cs.ks.push_back(k);
  }
  if (c.scheme) {
    if (*c.scheme != SchemeKind::ms1o && *c.scheme != SchemeKind::ms2o) {
      throw ConfigError("config: 'converge' studies ms1o or ms2o");
    }
    cs.schemes = {*c.scheme};
  }
  const fs::path out = c.output_dir;
  fs::create_directories(out);
  write_text(out / "config.resolved", format_config(c));

  const auto rows = run_convergence(cs);
  {
    std::ofstream csv(out / "convergence.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write convergence.csv");
    write_convergence(rows, csv);
  }
  for (SchemeKind k : cs.schemes) {
    std::vector<double> taus, ev, ew, er;
    for (const auto& r : rows) {
      if (r.scheme != k) continue;
      // Order in tau: for N-labelled rows the step is 1/N.
      taus.push_back(cs.variable ? cs.T / r.tau_or_N : r.tau_or_N);
      ev.push_back(r.err_velocity_L2);
      ew.push_back(r.err_vorticity_L2);
      er.push_back(r.err_r_abs);
    }
    std::cout << to_string(k) << " slope velocity = " << fmt(estimate_order(taus, ev))
              << ", vorticity = " << fmt(estimate_order(taus, ew));
    bool r_ok = true;
    for (double e : er) r_ok = r_ok && e > 0.0;
    if (r_ok) std::cout << ", r = " << fmt(estimate_order(taus, er));
    std::cout << "\n";
  }
  return 0;
}

struct Window {
  std::vector<double> t, tau, enstrophy;
};

Window accepted_window(const TimeSeries& s, double start) {
  Window w;
  for (const auto& r : s.rows) {
    if (!r.accepted || r.t < start) continue;
    w.t.push_back(r.t);
    w.tau.push_back(r.tau);
    w.enstrophy.push_back(r.enstrophy);
  }
  return w;
}

double window_start(const Flags& f) {
  if (f.window) return *f.window;
  if (!f.config.empty()) return load_config(f).stats_window_start;
  return RunConfig{}.stats_window_start;
}

std::vector<double> uniform_samples(const Window& w, double dt) {
  if (w.t.empty()) throw std::runtime_error("no accepted rows inside the statistics window");
  return resample_uniform(w.t, w.enstrophy, w.t.front(), w.t.back(), dt);
}

void write_pdf(const fs::path& dir, std::span<const double> edges, std::span<const double> p,
               std::span<const double> q) {
  fs::create_directories(dir);
  std::ofstream out(dir / "pdf.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pdf.csv");
  out << "bin_lo,bin_hi,p_a,p_b\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << fmt(edges[i]) << ',' << fmt(edges[i + 1]) << ',' << fmt(p[i]) << ',' << fmt(q[i]) << '\n';
  }
}

int cmd_stats(const Flags& f) {
  if (f.inputs.empty() || f.inputs.size() > 2) throw std::runtime_error("stats: give one or two time-series CSVs");
  const double start = window_start(f);
  std::cout << "metric,value\nwindow_start," << fmt(start) << "\n";
  std::vector<std::vector<double>> samples;
  for (std::size_t i = 0; i < f.inputs.size(); ++i) {
    const Window w = accepted_window(read_timeseries(f.inputs[i]), start);
    samples.push_back(uniform_samples(w, f.dt));
    const MeanStd ms = mean_std(samples.back());
    const std::string tag = f.inputs.size() == 2 ? (i == 0 ? "a_" : "b_") : "";
    std::cout << tag << "rows," << w.t.size() << "\n"
              << tag << "mean," << fmt(ms.mean) << "\n"
              << tag << "std," << fmt(ms.std) << "\n"
              << tag << "tail_2sigma," << fmt(tail_mass(samples.back(), ms.mean + 2 * ms.std)) << "\n"
              << tag << "tail_3sigma," << fmt(tail_mass(samples.back(), ms.mean + 3 * ms.std)) << "\n";
    // Constant steps carry no correlation.
    bool varies = false;
    for (double t : w.tau) varies = varies || t != w.tau.front();
    if (varies) std::cout << tag << "pcc_tau_enstrophy," << fmt(pcc(w.tau, w.enstrophy)) << "\n";
  }
  if (samples.size() == 2) {
    const auto edges = pooled_edges(samples[0], samples[1], f.bins);
    const auto p = enstrophy_pdf(samples[0], edges);
    const auto q = enstrophy_pdf(samples[1], edges);
    std::cout << "tv," << fmt(tv_distance(p, q)) << "\n";
    if (!f.output.empty()) write_pdf(f.output, edges, p, q);
  }
  return 0;
}

int cmd_compare(const Flags& f) {
  if (f.inputs.size() != 2) throw std::runtime_error("compare: give exactly two time-series CSVs");
  const double start = window_start(f);
  const auto a = uniform_samples(accepted_window(read_timeseries(f.inputs[0]), start), f.dt);
  const auto b = uniform_samples(accepted_window(read_timeseries(f.inputs[1]), start), f.dt);
  const auto edges = pooled_edges(a, b, f.bins);
  const auto p = enstrophy_pdf(a, edges);
  const auto q = enstrophy_pdf(b, edges);
  const SplitTv tv = split_tv_distance(p, q, edges, f.split);
  std::cout << "range,tv\n"
            << "full," << fmt(tv.full) << "\n"
            << "below_" << fmt(f.split) << "," << fmt(tv.below) << "\n"
            << "above_" << fmt(f.split) << "," << fmt(tv.above) << "\n";
  if (!f.output.empty()) write_pdf(f.output, edges, p, q);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-spectral 2D Navier-Stokes with ETD-mr-SAV time stepping"};
  app.require_subcommand(1);
  Flags f;

  auto* run = app.add_subcommand("run", "advance one configured run and write its time series");
  auto* converge = app.add_subcommand("converge", "temporal convergence study on the accuracy test");
  auto* stats = app.add_subcommand("stats", "enstrophy statistics of one or two time series");
  auto* compare = app.add_subcommand("compare", "split total-variation distances of two time series");
  for (auto* sc : {run, converge}) {
    sc->add_option("--config", f.config, "key = value config file")->required()->check(CLI::ExistingFile);
    sc->add_option("--output", f.output, "output directory (overrides output_dir)");
    sc->add_option("--seed", f.seed, "seed (overrides the config)");
    sc->add_flag("--paper-scale", f.paper_scale, "full-scale defaults for grid and horizon");
  }
  for (auto* sc : {stats, compare}) {
    sc->add_option("inputs", f.inputs, "time-series CSV files")->required()->check(CLI::ExistingFile);
    sc->add_option("--config", f.config, "config supplying stats_window_start")->check(CLI::ExistingFile);
    sc->add_option("--window", f.window, "statistics start time (overrides the config)");
    sc->add_option("--output", f.output, "directory for pdf.csv");
    sc->add_option("--bins", f.bins, "PDF bins over the pooled range")->check(CLI::PositiveNumber);
    sc->add_option("--dt", f.dt, "uniform resampling interval")->check(CLI::PositiveNumber);
    sc->add_flag("--paper-scale", f.paper_scale, "full-scale defaults when reading --config");
  }
  compare->add_option("--split", f.split, "enstrophy level splitting the ranges");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return cmd_run(f);
    if (*converge) return cmd_converge(f);
    if (*stats) return cmd_stats(f);
    if (*compare) return cmd_compare(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
