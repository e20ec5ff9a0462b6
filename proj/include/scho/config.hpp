#pragma once

// Run configuration: flat "section.key = value" lines, '#' starts a comment.
// Every key has a default; unknown or repeated keys are errors. See README.md
// for the key table.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "scho/control.hpp"
#include "scho/io.hpp"
#include "scho/random.hpp"

namespace scho {

struct RunConfig {
  // grid
  int nx = 32, ny = 32;
  double Lx = 8.0, Ly = 8.0;          // large enough for phase separation to persist
  // physics
  PhysParams physics;
  // time
  double T = 0.1;
  int nt = 100;
  // control
  double beta = 1e-3;
  double theta_min = -1.0, theta_max = 1.0;
  double K = 10.0;                  // L2(0,T;L2) radius for sampled controls
  std::string theta0 = "smooth";    // zero | constant | smooth
  double theta0_value = 1.0;       // constant value or smooth amplitude
  // targets
  std::string targets_preset = "zero";  // zero | constant | file | synthetic
  double target_u = 0.0, target_vx = 0.0, target_vy = 0.0;
  std::string targets_path;
  double synthetic_amp = 1.0;
  // initial data
  std::string u0 = "random";        // zero | constant | random | smooth | file
  double u0_value = 0.0;
  double u0_amp = 1.0;
  std::string u0_path;
  std::string v0 = "zero";          // zero | file
  std::string v0_path;
  // solver
  SolverSettings solver;
  // optimizer
  OptConfig opt;
  // derivative checks
  int check_directions = 3;
  double check_tol = 0.02;
  double check_min_order = 1.8;
  double check_linearity_tol = 1e-10;
  // output
  int output_stride = 10;
  std::uint64_t seed = 1;

  std::filesystem::path base_dir;   // relative paths resolve against this
  std::vector<std::string> warnings;

  GridSpec grid() const { return make_grid(nx, ny, Lx, Ly); }
  TimeGrid time() const { return make_time_grid(T, nt); }
  ControlBounds bounds() const { return ControlBounds{theta_min, theta_max, {}, {}}; }

  /// Re-checks every module precondition; messages name the offending key.
  void validate();
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_int_value(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

inline double parse_double_value(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(x)) {
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  }
  return x;
}

inline std::string choice(const std::string& key, const std::string& v, std::initializer_list<const char*> opts) {
  std::string list;
  for (const char* o : opts) {
    if (v == o) return v;
    list += list.empty() ? o : std::string(" | ") + o;
  }
  throw ConfigError(key + ": expected one of " + list + ", got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

inline const std::map<std::string, Setter>& config_setters() {
  auto I = [](int RunConfig::*m) -> Setter {
    return [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_int_value<int>(k, v); };
  };
  auto D = [](double RunConfig::*m) -> Setter {
    return [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_double_value(k, v); };
  };
  auto S = [](std::string RunConfig::*m) -> Setter {
    return [m](RunConfig& c, const std::string&, const std::string& v) { c.*m = v; };
  };
  static const std::map<std::string, Setter> table = {
      {"grid.nx", I(&RunConfig::nx)},
      {"grid.ny", I(&RunConfig::ny)},
      {"grid.Lx", D(&RunConfig::Lx)},
      {"grid.Ly", D(&RunConfig::Ly)},
      {"physics.mu", [](RunConfig& c, auto& k, auto& v) { c.physics.mu = parse_double_value(k, v); }},
      {"physics.lambda", [](RunConfig& c, auto& k, auto& v) { c.physics.lambda = parse_double_value(k, v); }},
      {"physics.alpha", [](RunConfig& c, auto& k, auto& v) { c.physics.alpha = parse_double_value(k, v); }},
      {"physics.stab_S", [](RunConfig& c, auto& k, auto& v) { c.physics.stab_S = parse_double_value(k, v); }},
      {"time.T", D(&RunConfig::T)},
      {"time.nt", I(&RunConfig::nt)},
      {"control.beta", D(&RunConfig::beta)},
      {"control.theta_min", D(&RunConfig::theta_min)},
      {"control.theta_max", D(&RunConfig::theta_max)},
      {"control.K", D(&RunConfig::K)},
      {"control.theta0",
       [](RunConfig& c, auto& k, auto& v) { c.theta0 = choice(k, v, {"zero", "constant", "smooth"}); }},
      {"control.theta0_value", D(&RunConfig::theta0_value)},
      {"targets.preset",
       [](RunConfig& c, auto& k, auto& v) {
         c.targets_preset = choice(k, v, {"zero", "constant", "file", "synthetic"});
       }},
      {"targets.u", D(&RunConfig::target_u)},
      {"targets.vx", D(&RunConfig::target_vx)},
      {"targets.vy", D(&RunConfig::target_vy)},
      {"targets.path", S(&RunConfig::targets_path)},
      {"targets.synthetic_amp", D(&RunConfig::synthetic_amp)},
      {"initial.u0",
       [](RunConfig& c, auto& k, auto& v) {
         c.u0 = choice(k, v, {"zero", "constant", "random", "smooth", "file"});
       }},
      {"initial.u0_value", D(&RunConfig::u0_value)},
      {"initial.u0_amp", D(&RunConfig::u0_amp)},
      {"initial.u0_path", S(&RunConfig::u0_path)},
      {"initial.v0", [](RunConfig& c, auto& k, auto& v) { c.v0 = choice(k, v, {"zero", "file"}); }},
      {"initial.v0_path", S(&RunConfig::v0_path)},
      {"solver.cg_tol", [](RunConfig& c, auto& k, auto& v) { c.solver.cg_tol = parse_double_value(k, v); }},
      {"solver.cg_maxiter",
       [](RunConfig& c, auto& k, auto& v) { c.solver.cg_maxiter = parse_int_value<int>(k, v); }},
      {"opt.max_iters", [](RunConfig& c, auto& k, auto& v) { c.opt.max_iters = parse_int_value<int>(k, v); }},
      {"opt.tol", [](RunConfig& c, auto& k, auto& v) { c.opt.tol = parse_double_value(k, v); }},
      {"opt.armijo_c1", [](RunConfig& c, auto& k, auto& v) { c.opt.armijo_c1 = parse_double_value(k, v); }},
      {"opt.backtrack_rho",
       [](RunConfig& c, auto& k, auto& v) { c.opt.backtrack_rho = parse_double_value(k, v); }},
      {"opt.s0", [](RunConfig& c, auto& k, auto& v) { c.opt.s0 = parse_double_value(k, v); }},
      {"opt.mode",
       [](RunConfig& c, auto& k, auto& v) {
         c.opt.mode = choice(k, v, {"box", "dykstra"}) == "box" ? ProjectionMode::Box
                                                                : ProjectionMode::BoxSolenoidal;
       }},
      {"opt.dykstra_sweeps",
       [](RunConfig& c, auto& k, auto& v) { c.opt.dykstra_sweeps = parse_int_value<int>(k, v); }},
      {"check.directions", I(&RunConfig::check_directions)},
      {"check.tol", D(&RunConfig::check_tol)},
      {"check.min_order", D(&RunConfig::check_min_order)},
      {"check.linearity_tol", D(&RunConfig::check_linearity_tol)},
      {"output.stride", I(&RunConfig::output_stride)},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = parse_int_value<std::uint64_t>(k, v); }},
  };
  return table;
}

}  // namespace detail

inline void RunConfig::validate() {
  if (nx < 4) throw ConfigError("grid.nx must be >= 4 (got " + std::to_string(nx) + ")");
  if (ny < 4) throw ConfigError("grid.ny must be >= 4 (got " + std::to_string(ny) + ")");
  if (!(Lx > 0.0)) throw ConfigError("grid.Lx must be > 0");
  if (!(Ly > 0.0)) throw ConfigError("grid.Ly must be > 0");
  warnings = physics.validate();
  (void)time();
  if (!(beta > 0.0)) throw ConfigError("control.beta must be > 0");
  if (!(theta_min <= theta_max)) throw ConfigError("control.theta_min must not exceed control.theta_max");
  if (!(K > 0.0)) throw ConfigError("control.K must be > 0");
  if (theta0 == "smooth" && !(theta0_value >= 0.0)) {
    throw ConfigError("control.theta0_value must be >= 0 for a smooth initial control");
  }
  if (targets_preset == "file" && targets_path.empty()) throw ConfigError("targets.path is required for preset file");
  if (!(synthetic_amp >= 0.0)) throw ConfigError("targets.synthetic_amp must be >= 0");
  if (u0 == "file" && u0_path.empty()) throw ConfigError("initial.u0_path is required for initial.u0 = file");
  if (v0 == "file" && v0_path.empty()) throw ConfigError("initial.v0_path is required for initial.v0 = file");
  if (!(u0_amp >= 0.0)) throw ConfigError("initial.u0_amp must be >= 0");
  if (!(solver.cg_tol > 0.0 && solver.cg_tol < 1.0)) throw ConfigError("solver.cg_tol must lie in (0, 1)");
  if (solver.cg_maxiter < 0) throw ConfigError("solver.cg_maxiter must be >= 0");
  if (opt.max_iters < 0) throw ConfigError("opt.max_iters must be >= 0");
  if (!(opt.tol > 0.0)) throw ConfigError("opt.tol must be > 0");
  if (!(opt.armijo_c1 > 0.0 && opt.armijo_c1 < 1.0)) throw ConfigError("opt.armijo_c1 must lie in (0, 1)");
  if (!(opt.backtrack_rho > 0.0 && opt.backtrack_rho < 1.0)) {
    throw ConfigError("opt.backtrack_rho must lie in (0, 1)");
  }
  if (!(opt.s0 > 0.0)) throw ConfigError("opt.s0 must be > 0");
  if (opt.dykstra_sweeps < 1) throw ConfigError("opt.dykstra_sweeps must be >= 1");
  if (check_directions < 1) throw ConfigError("check.directions must be >= 1");
  if (!(check_tol > 0.0)) throw ConfigError("check.tol must be > 0");
  if (!(check_linearity_tol > 0.0)) throw ConfigError("check.linearity_tol must be > 0");
  if (output_stride < 0) throw ConfigError("output.stride must be >= 0");
  check_memory_budget(grid(), time(), solver);
}

/// Parses configuration text. `origin` prefixes syntax errors ("<origin>:<line>: ...").
inline RunConfig parse_config_string(const std::string& text, const std::string& origin = "config") {
  RunConfig cfg;
  const auto& setters = detail::config_setters();
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "syntax error, expected 'section.key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "syntax error, missing key");
    if (value.empty()) throw ConfigError(where + "syntax error, missing value for " + key);
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (auto [pos, fresh] = seen.emplace(key, lineno); !fresh) {
      throw ConfigError(where + "duplicate key '" + key + "' (first set on line " + std::to_string(pos->second) +
                        ")");
    }
    try {
      it->second(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config_string(ss.str(), path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

// ---------------------------------------------------------------------------
// Building run inputs from a configuration. Each random quantity draws from
// its own SplitMix64 stream derived from the seed, so adding a draw in one
// place does not shift the others.

enum class RngStream : std::uint64_t { InitialU = 1, Directions = 2, Theta0 = 3, Lipschitz = 4 };

inline SplitMix64 make_stream(std::uint64_t seed, RngStream s) {
  SplitMix64 mix(seed ^ (static_cast<std::uint64_t>(s) * 0xD1B54A32D192ED03ull));
  return SplitMix64(mix.next());
}

inline std::filesystem::path resolve_path(const RunConfig& cfg, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || cfg.base_dir.empty() ? path : cfg.base_dir / path;
}

inline ScalarField build_initial_u(const RunConfig& cfg) {
  const GridSpec g = cfg.grid();
  if (cfg.u0 == "zero") return ScalarField(g);
  if (cfg.u0 == "constant") {
    ScalarField u(g);
    for (double& x : u.values()) x = cfg.u0_value;
    return u;
  }
  if (cfg.u0 == "file") return read_scalar_field(resolve_path(cfg, cfg.u0_path), &g).first;
  SplitMix64 rng = make_stream(cfg.seed, RngStream::InitialU);
  if (cfg.u0 == "random") return random_scalar(g, rng, -cfg.u0_amp, cfg.u0_amp);
  return smooth_random_scalar(g, rng, 3, cfg.u0_amp);
}

inline VectorField build_initial_v(const RunConfig& cfg) {
  const GridSpec g = cfg.grid();
  if (cfg.v0 == "zero") return VectorField(g);
  auto v = read_vector_field(resolve_path(cfg, cfg.v0_path), &g).first;
  if (!is_admissible_velocity(v)) throw ConfigError("initial.v0_path: wall-normal velocity must vanish");
  return v;
}

/// Steady vortex (d_y psi, -d_x psi) with psi = A sin^2(pi x/Lx) sin^2(pi y/Ly) / pi,
/// evaluated pointwise on the faces; used as the reachable control of the
/// synthetic target preset.
inline VectorField vortex_field(const GridSpec& g, double amp) {
  const double pi = std::numbers::pi;
  VectorField v(g);
  auto s2 = [](double t) { return std::sin(t) * std::sin(t); };
  auto ds2 = [](double t) { return std::sin(2.0 * t); };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const double X = pi * g.xf(i) / g.Lx, Y = pi * g.yc(j) / g.Ly;
      v.x(i, j) = amp * s2(X) * ds2(Y) / g.Ly;
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double X = pi * g.xc(i) / g.Lx, Y = pi * g.yf(j) / g.Ly;
      v.y(i, j) = -amp * ds2(X) * s2(Y) / g.Lx;
    }
  zero_boundary_normal(v);
  return v;
}

/// theta*(t) = sin^2(pi t / T) * vortex. The envelope vanishes at t = T,
/// where controls barely influence the cost.
inline ControlSequence synthetic_control(const RunConfig& cfg) {
  const TimeGrid tg = cfg.time();
  const VectorField base = vortex_field(cfg.grid(), cfg.synthetic_amp);
  ControlSequence th;
  th.reserve(tg.nt);
  for (int n = 0; n < tg.nt; ++n) {
    const double s = std::sin(std::numbers::pi * tg.time(n) / tg.T);
    VectorField f = base;
    scale(s * s, f);
    th.push_back(std::move(f));
  }
  return th;
}

inline ControlSequence build_theta0(const RunConfig& cfg) {
  const GridSpec g = cfg.grid();
  if (cfg.theta0 == "zero") return zero_controls(g, cfg.time());
  if (cfg.theta0 == "constant") {
    VectorField c(g);
    for (double& x : c.xvals()) x = cfg.theta0_value;
    for (double& x : c.yvals()) x = cfg.theta0_value;
    zero_boundary_normal(c);
    return ControlSequence(cfg.nt, c);
  }
  SplitMix64 rng = make_stream(cfg.seed, RngStream::Theta0);
  return ControlSequence(cfg.nt, smooth_random_vector(g, rng, 3, cfg.theta0_value));
}

/// Random direction h_n = cos(pi t_n / T) A + sin(pi t_n / T) B with smooth
/// random spatial fields A, B.
inline ControlSequence random_direction(const GridSpec& g, const TimeGrid& tg, SplitMix64& rng, double amp = 1.0) {
  const VectorField A = smooth_random_vector(g, rng, 3, amp);
  const VectorField B = smooth_random_vector(g, rng, 3, amp);
  ControlSequence h;
  h.reserve(tg.nt);
  for (int n = 0; n < tg.nt; ++n) {
    const double s = std::numbers::pi * tg.time(n) / tg.T;
    VectorField hn = A;
    scale(std::cos(s), hn);
    axpy(std::sin(s), B, hn);
    h.push_back(std::move(hn));
  }
  return h;
}

/// Target file naming shared with `simulate` dumps: <dir>/u_NNNNNN and <dir>/v_NNNNNN.{fx,fy}.
inline std::string level_name(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%06d", prefix, n);
  return buf;
}

inline Targets build_targets(const RunConfig& cfg, const ScalarField& u0, const VectorField& v0) {
  const GridSpec g = cfg.grid();
  const TimeGrid tg = cfg.time();
  Targets t;
  if (cfg.targets_preset == "zero" || cfg.targets_preset == "constant") {
    ScalarField u(g);
    VectorField v(g);
    if (cfg.targets_preset == "constant") {
      for (double& x : u.values()) x = cfg.target_u;
      for (double& x : v.xvals()) x = cfg.target_vx;
      for (double& x : v.yvals()) x = cfg.target_vy;
      zero_boundary_normal(v);
    }
    t.u_d.assign(tg.nt, u);
    t.v_d.assign(tg.nt, v);
    return t;
  }
  if (cfg.targets_preset == "file") {
    const auto dir = resolve_path(cfg, cfg.targets_path);
    for (int n = 0; n < tg.nt; ++n) {
      t.u_d.push_back(read_scalar_field(dir / level_name("u", n), &g).first);
      t.v_d.push_back(read_vector_field(dir / level_name("v", n), &g).first);
    }
    return t;
  }
  const Trajectory tr = solve_forward(u0, v0, synthetic_control(cfg), g, cfg.physics, tg, cfg.solver);
  return targets_from_trajectory(tr);
}

inline ReducedProblem build_problem(const RunConfig& cfg) {
  ReducedProblem prob{build_initial_u(cfg), build_initial_v(cfg), cfg.grid(), cfg.physics, cfg.time(),
                      CostParams{cfg.beta, {}, cfg.bounds()}, cfg.solver};
  prob.cp.targets = build_targets(cfg, prob.u0, prob.v0);
  return prob;
}

}  // namespace scho
