#pragma once

// Run configuration (flat key = value text), the time-series CSV and the
// binary vorticity snapshot format.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "etdsav/adaptive.hpp"
#include "etdsav/harness.hpp"

namespace etdsav {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ProblemKind { example1, kolmogorov };

struct RunConfig {
  std::optional<SchemeKind> scheme;
  int n = 128;
  double nu = 0.0;
  double gamma = 0.0;
  ProblemKind problem = ProblemKind::kolmogorov;
  int m = 2;
  bool perturbed = true;
  double noise = 1e-10;  // symmetry-breaking nudge added to the perturbed start
  bool attractor_start = false;
  double T = 0.0;
  std::optional<double> tau;
  std::optional<AdaptiveParams> adaptive;
  double tau_init = 0.0;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  double snapshot_every = 0.0;
  double stats_window_start = 100.0;
  double lambda1 = box_lambda1;
  bool monitor = true;
  bool variable_steps = false;
  double step_amplitude = 0.1;
  double tau_ref = 0.1 / 1024.0;
  std::optional<int> k_min, k_max;  // convergence sweep; defaults 0..6, or 5..10 for variable steps
  std::string init_snapshot;
  bool paper_scale = false;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

inline std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), p);
}

}  // namespace detail

/// Parses the flat configuration format: one `key = value` per line, `#`
/// starts a comment.  Unknown keys are errors; gamma has no default.
/// `paper_scale` switches the unspecified defaults (grid, long-run T) to the
/// full-scale study values.
inline RunConfig parse_config(std::string_view text, bool paper_scale = false) {
  std::map<std::string, std::string> kv;
  std::map<std::string, int> line_of;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config: line " + std::to_string(lineno) + ": empty key or value");
    }
    if (kv.count(key)) {
      throw ConfigError("config: line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv[key] = value;
    line_of[key] = lineno;
  }

  RunConfig c;
  c.paper_scale = paper_scale;
  c.n = paper_scale ? 256 : 128;
  AdaptiveParams ap;
  bool any_adaptive = false;
  std::optional<double> nu, T;

  for (const auto& [key, v] : kv) {
    if (key == "scheme") {
      try {
        c.scheme = scheme_from_string(v);
      } catch (const std::invalid_argument&) {
        throw ConfigError("config: key 'scheme' has unknown value '" + v + "'");
      }
    } else if (key == "n") {
      c.n = static_cast<int>(detail::parse_int(key, v));
    } else if (key == "nu") {
      nu = detail::parse_double(key, v);
    } else if (key == "gamma") {
      c.gamma = detail::parse_double(key, v);
    } else if (key == "problem") {
      if (v == "example1") {
        c.problem = ProblemKind::example1;
      } else if (v == "kolmogorov") {
        c.problem = ProblemKind::kolmogorov;
      } else {
        throw ConfigError("config: key 'problem' has unknown value '" + v + "'");
      }
    } else if (key == "m") {
      c.m = static_cast<int>(detail::parse_int(key, v));
    } else if (key == "perturbed") {
      c.perturbed = detail::parse_bool(key, v);
    } else if (key == "noise") {
      c.noise = detail::parse_double(key, v);
    } else if (key == "attractor_start") {
      c.attractor_start = detail::parse_bool(key, v);
    } else if (key == "T") {
      T = detail::parse_double(key, v);
    } else if (key == "tau") {
      c.tau = detail::parse_double(key, v);
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(detail::parse_int(key, v));
    } else if (key == "output_dir") {
      c.output_dir = v;
    } else if (key == "snapshot_every") {
      c.snapshot_every = detail::parse_double(key, v);
    } else if (key == "stats_window_start") {
      c.stats_window_start = detail::parse_double(key, v);
    } else if (key == "lambda1") {
      c.lambda1 = detail::parse_double(key, v);
    } else if (key == "monitor") {
      c.monitor = detail::parse_bool(key, v);
    } else if (key == "variable_steps") {
      c.variable_steps = detail::parse_bool(key, v);
    } else if (key == "step_amplitude") {
      c.step_amplitude = detail::parse_double(key, v);
    } else if (key == "tau_ref") {
      c.tau_ref = detail::parse_double(key, v);
    } else if (key == "k_min") {
      c.k_min = static_cast<int>(detail::parse_int(key, v));
    } else if (key == "k_max") {
      c.k_max = static_cast<int>(detail::parse_int(key, v));
    } else if (key == "init_snapshot") {
      c.init_snapshot = v;
    } else if (key.rfind("adaptive.", 0) == 0) {
      any_adaptive = true;
      const std::string sub = key.substr(9);
      if (sub == "rho") {
        ap.rho = detail::parse_double(key, v);
      } else if (sub == "tol_u") {
        ap.tol_u = detail::parse_double(key, v);
      } else if (sub == "tol_q") {
        ap.tol_q = detail::parse_double(key, v);
      } else if (sub == "tau_min") {
        ap.tau_min = detail::parse_double(key, v);
      } else if (sub == "tau_max") {
        ap.tau_max = detail::parse_double(key, v);
      } else if (sub == "max_rejects") {
        ap.max_rejects = static_cast<int>(detail::parse_int(key, v));
      } else if (sub == "tau_init") {
        c.tau_init = detail::parse_double(key, v);
      } else if (sub == "e_q") {
        if (v == "deviation") {
          ap.aux_indicator = AuxIndicator::deviation;
        } else if (v == "literal") {
          ap.aux_indicator = AuxIndicator::literal_unit;
        } else {
          throw ConfigError("config: key 'adaptive.e_q' expects deviation or literal");
        }
      } else {
        throw ConfigError("config: line " + std::to_string(line_of[key]) + ": unknown key '" + key + "'");
      }
    } else {
      throw ConfigError("config: line " + std::to_string(line_of[key]) + ": unknown key '" + key + "'");
    }
  }

  if (!kv.count("gamma")) throw ConfigError("config: missing required key 'gamma'");
  if (!(c.gamma > 0.0)) throw ConfigError("config: key 'gamma' must be positive");
  if (c.n < 8 || c.n % 2 != 0) throw ConfigError("config: key 'n' must be even and >= 8");
  if (c.m < 1) throw ConfigError("config: key 'm' must be >= 1");
  c.nu = nu ? *nu : (c.problem == ProblemKind::example1 ? 1e-4 : 1.0 / (10.0 * c.m));
  if (!(c.nu > 0.0)) throw ConfigError("config: key 'nu' must be positive");
  c.T = T ? *T : (c.problem == ProblemKind::example1 ? 1.0 : (paper_scale ? 1e4 : 2000.0));
  if (!(c.T > 0.0)) throw ConfigError("config: key 'T' must be positive");
  if (c.tau && !(*c.tau > 0.0)) throw ConfigError("config: key 'tau' must be positive");
  if (!(c.noise >= 0.0)) throw ConfigError("config: key 'noise' must be >= 0");
  if (!(c.lambda1 > 0.0)) throw ConfigError("config: key 'lambda1' must be positive");
  if (!(c.step_amplitude >= 0.0 && c.step_amplitude < 1.0)) {
    throw ConfigError("config: key 'step_amplitude' must lie in [0, 1)");
  }
  if ((c.k_min && *c.k_min < 0) || (c.k_max && *c.k_max > 30)) {
    throw ConfigError("config: keys 'k_min', 'k_max' must lie in [0, 30]");
  }
  if (any_adaptive) {
    try {
      ap.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: adaptive block: ") + e.what());
    }
    c.adaptive = ap;
  }

  if (c.scheme) {
    switch (*c.scheme) {
      case SchemeKind::ms1o:
      case SchemeKind::ms2o:
      case SchemeKind::etdrk4:
        if (c.adaptive) throw ConfigError("config: keys 'tau' and 'adaptive.*' are exclusive; scheme " + to_string(*c.scheme) + " takes 'tau'");
        if (!c.tau) throw ConfigError("config: scheme " + to_string(*c.scheme) + " requires key 'tau'");
        break;
      case SchemeKind::ms12:
        if (c.tau) throw ConfigError("config: keys 'tau' and 'adaptive.*' are exclusive; scheme ms12 takes 'adaptive.*'");
        if (!c.adaptive) c.adaptive = AdaptiveParams{};
        break;
    }
  }
  if (c.tau && c.adaptive) throw ConfigError("config: keys 'tau' and 'adaptive.*' are exclusive");
  return c;
}

/// Resolved configuration in the same key = value format.
inline std::string format_config(const RunConfig& c) {
  using detail::format_double;
  std::ostringstream out;
  if (c.scheme) out << "scheme = " << to_string(*c.scheme) << "\n";
  out << "n = " << c.n << "\n";
  out << "nu = " << format_double(c.nu) << "\n";
  out << "gamma = " << format_double(c.gamma) << "\n";
  out << "problem = " << (c.problem == ProblemKind::example1 ? "example1" : "kolmogorov") << "\n";
  if (c.problem == ProblemKind::kolmogorov) {
    out << "m = " << c.m << "\n";
    out << "perturbed = " << (c.perturbed ? "true" : "false") << "\n";
    out << "noise = " << format_double(c.noise) << "\n";
    out << "attractor_start = " << (c.attractor_start ? "true" : "false") << "\n";
  }
  out << "T = " << format_double(c.T) << "\n";
  if (c.tau) out << "tau = " << format_double(*c.tau) << "\n";
  if (c.adaptive) {
    const auto& a = *c.adaptive;
    out << "adaptive.rho = " << format_double(a.rho) << "\n";
    out << "adaptive.tol_u = " << format_double(a.tol_u) << "\n";
    out << "adaptive.tol_q = " << format_double(a.tol_q) << "\n";
    out << "adaptive.tau_min = " << format_double(a.tau_min) << "\n";
    out << "adaptive.tau_max = " << format_double(a.tau_max) << "\n";
    out << "adaptive.max_rejects = " << a.max_rejects << "\n";
    out << "adaptive.e_q = " << (a.aux_indicator == AuxIndicator::deviation ? "deviation" : "literal") << "\n";
    if (c.tau_init > 0.0) out << "adaptive.tau_init = " << format_double(c.tau_init) << "\n";
  }
  out << "seed = " << c.seed << "\n";
  out << "output_dir = " << c.output_dir << "\n";
  out << "snapshot_every = " << format_double(c.snapshot_every) << "\n";
  out << "stats_window_start = " << format_double(c.stats_window_start) << "\n";
  out << "lambda1 = " << format_double(c.lambda1) << "\n";
  out << "monitor = " << (c.monitor ? "true" : "false") << "\n";
  out << "variable_steps = " << (c.variable_steps ? "true" : "false") << "\n";
  out << "step_amplitude = " << format_double(c.step_amplitude) << "\n";
  out << "tau_ref = " << format_double(c.tau_ref) << "\n";
  if (c.k_min) out << "k_min = " << *c.k_min << "\n";
  if (c.k_max) out << "k_max = " << *c.k_max << "\n";
  if (!c.init_snapshot.empty()) out << "init_snapshot = " << c.init_snapshot << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Time-series CSV

inline constexpr std::string_view timeseries_header = "step,t,tau,enstrophy,r,e_u,e_q,accepted,rejections";

inline void write_timeseries(const TimeSeries& series, std::ostream& out) {
  using detail::format_double;
  out << timeseries_header << '\n';
  for (const auto& r : series.rows) {
    out << r.step << ',' << format_double(r.t) << ',' << format_double(r.tau) << ','
        << format_double(r.enstrophy) << ',' << format_double(r.r) << ',' << format_double(r.e_u)
        << ',' << format_double(r.e_q) << ',' << r.accepted << ',' << r.rejections << '\n';
  }
}

inline void write_timeseries(const TimeSeries& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_timeseries: cannot open '" + path + "'");
  write_timeseries(series, out);
  if (!out) throw std::runtime_error("write_timeseries: write failed for '" + path + "'");
}

inline TimeSeries read_timeseries(std::istream& in, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_timeseries: '" + name + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != timeseries_header) {
    throw std::runtime_error("read_timeseries: '" + name + "' header mismatch: expected '" +
                             std::string(timeseries_header) + "'");
  }
  TimeSeries s;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 9) {
      throw std::runtime_error("read_timeseries: '" + name + "' line " + std::to_string(lineno) +
                               ": expected 9 columns");
    }
    auto num = [&](std::string_view v, auto& outv) {
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), outv);
      if (ec != std::errc() || p != v.data() + v.size()) {
        throw std::runtime_error("read_timeseries: '" + name + "' line " + std::to_string(lineno) +
                                 ": bad value '" + std::string(v) + "'");
      }
    };
    TimeSeriesRow r;
    num(cols[0], r.step);
    num(cols[1], r.t);
    num(cols[2], r.tau);
    num(cols[3], r.enstrophy);
    num(cols[4], r.r);
    num(cols[5], r.e_u);
    num(cols[6], r.e_q);
    num(cols[7], r.accepted);
    num(cols[8], r.rejections);
    if (r.accepted != 0 && r.accepted != 1) {
      throw std::runtime_error("read_timeseries: '" + name + "' line " + std::to_string(lineno) +
                               ": accepted must be 0 or 1");
    }
    s.rows.push_back(r);
  }
  return s;
}

inline TimeSeries read_timeseries(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_timeseries: cannot open '" + path + "'");
  return read_timeseries(in, path);
}

inline void write_convergence(const std::vector<ConvergenceRow>& rows, std::ostream& out) {
  using detail::format_double;
  out << "scheme,tau_or_N,err_velocity_L2,err_vorticity_L2,err_r_abs\n";
  for (const auto& r : rows) {
    out << to_string(r.scheme) << ',' << format_double(r.tau_or_N) << ','
        << format_double(r.err_velocity_L2) << ',' << format_double(r.err_vorticity_L2) << ','
        << format_double(r.err_r_abs) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Binary snapshot: "ETDS", u32 version, u32 nx, u32 ny, f64 t, f64 nu,
// nx*ny f64 physical vorticity values, row-major with y outer.  All
// little-endian.

inline constexpr std::uint32_t snapshot_version = 1;

namespace detail {
inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
inline void put_f64(std::string& buf, double x) {
  const auto v = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
inline double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(v);
}
}  // namespace detail

inline std::string encode_snapshot(const ScalarFieldHat& omega, double t, double nu) {
  const auto values = omega.to_physical();
  const auto n = static_cast<std::uint32_t>(omega.grid().n());
  std::string buf;
  buf.reserve(32 + values.size() * 8);
  buf.append("ETDS", 4);
  detail::put_u32(buf, snapshot_version);
  detail::put_u32(buf, n);
  detail::put_u32(buf, n);
  detail::put_f64(buf, t);
  detail::put_f64(buf, nu);
  for (double v : values) detail::put_f64(buf, v);
  return buf;
}

inline void write_snapshot(const ScalarFieldHat& omega, double t, double nu, const std::string& path) {
  const std::string buf = encode_snapshot(omega, t, nu);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_snapshot: cannot open '" + path + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write_snapshot: write failed for '" + path + "'");
}

struct Snapshot {
  ScalarFieldHat omega;
  double t = 0.0;
  double nu = 0.0;
};

/// Decodes a snapshot; `grid` is reused when its size matches, otherwise a
/// new grid is created.
inline Snapshot decode_snapshot(std::string_view bytes, GridPtr grid = nullptr) {
  constexpr std::size_t header = 4 + 4 + 4 + 4 + 8 + 8;
  if (bytes.size() < header) throw std::runtime_error("read_snapshot: truncated header");
  if (bytes.substr(0, 4) != "ETDS") throw std::runtime_error("read_snapshot: bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = detail::get_u32(p + 4);
  if (version != snapshot_version) {
    throw std::runtime_error("read_snapshot: unsupported version " + std::to_string(version));
  }
  const std::uint32_t nx = detail::get_u32(p + 8);
  const std::uint32_t ny = detail::get_u32(p + 12);
  if (nx != ny) throw std::runtime_error("read_snapshot: non-square grids are not supported");
  Snapshot s;
  s.t = detail::get_f64(p + 16);
  s.nu = detail::get_f64(p + 24);
  const std::size_t count = static_cast<std::size_t>(nx) * ny;
  if (bytes.size() != header + 8 * count) throw std::runtime_error("read_snapshot: truncated payload");
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = detail::get_f64(p + header + 8 * i);
  if (!grid || grid->n() != static_cast<int>(nx)) grid = make_grid(static_cast<int>(nx));
  s.omega = ScalarFieldHat::from_physical(grid, values);
  return s;
}

inline Snapshot read_snapshot(const std::string& path, GridPtr grid = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_snapshot: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_snapshot(ss.str(), std::move(grid));
}

}  // namespace etdsav
