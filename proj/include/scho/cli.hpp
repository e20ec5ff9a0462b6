#pragma once

// Command-line workflows. Exit status: 0 ok, 1 usage, 2 validation,
// 3 solver failure, 4 tolerance failure.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "scho/config.hpp"

namespace scho {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitValidation = 2, kExitSolver = 3, kExitTolerance = 4 };

/// One row per snapshot; the J_* columns hold the level-n contribution to the
/// cost (zero at n = nt, which the left rectangle rule does not visit), so
/// each column sums to the matching cost term.
inline CsvTable diagnostics_table(const Trajectory& tr, const ControlSequence& theta, const CostParams& cp) {
  CsvTable t({"step", "time", "energy", "mean_u", "div_inf", "J_track_v", "J_track_u", "J_reg"});
  const TimeGrid& tg = tr.time;
  for (int n = 0; n <= tg.nt; ++n) {
    const auto& d = tr.diagnostics[n];
    double jv = 0.0, ju = 0.0, jr = 0.0;
    if (n < tg.nt) {
      const VectorField dv = tr.snapshots[n].v - cp.targets.v_d[n];
      const ScalarField du = tr.snapshots[n].u - cp.targets.u_d[n];
      jv = 0.5 * tg.dt * inner_face(dv, dv);
      ju = 0.5 * tg.dt * inner_cc(du, du);
      jr = 0.5 * cp.beta * tg.dt * inner_face(theta[n], theta[n]);
    }
    t.row({double(n), tg.time(n), d.energy, d.mean_u, d.div_inf, jv, ju, jr});
  }
  return t;
}

namespace detail {

inline void dump_snapshots(const Trajectory& tr, const std::filesystem::path& dir, int stride) {
  std::filesystem::create_directories(dir);
  const int nt = tr.time.nt;
  for (int n = 0; n <= nt; ++n) {
    if (n != nt && (stride == 0 || n % stride != 0)) continue;
    const Snapshot& s = tr.snapshots[n];
    FieldMeta meta{FieldKind::Cell, tr.time.time(n), n};
    write_field(dir / level_name("u", n), s.u, meta);
    write_field(dir / level_name("w", n), s.w, meta);
    write_field(dir / level_name("p", n), s.p, meta);
    write_field(dir / level_name("v", n), s.v, meta);
  }
}

inline void dump_controls(const ControlSequence& theta, const TimeGrid& tg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (int n = 0; n < tg.nt; ++n) {
    write_field(dir / level_name("theta", n), theta[n], FieldMeta{FieldKind::FaceX, tg.time(n), n});
  }
}

inline std::vector<ControlSequence> directions(const RunConfig& cfg) {
  SplitMix64 rng = make_stream(cfg.seed, RngStream::Directions);
  std::vector<ControlSequence> out;
  for (int d = 0; d < cfg.check_directions; ++d) out.push_back(random_direction(cfg.grid(), cfg.time(), rng));
  return out;
}

inline const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

// ---------------------------------------------------------------------------

inline int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out) {
  const ReducedProblem prob = build_problem(cfg);
  const ControlSequence theta = build_theta0(cfg);
  const Trajectory tr = prob.forward(theta);
  for (const auto& w : tr.warnings) std::cerr << "warning: " << w << '\n';
  diagnostics_table(tr, theta, prob.cp).write(out / "diagnostics.csv");
  dump_snapshots(tr, out / "fields", cfg.output_stride);
  const auto& last = tr.diagnostics.back();
  std::cout << "simulate: nt=" << cfg.nt << " final energy=" << format_g17(last.energy)
            << " mean_u=" << format_g17(last.mean_u) << " div_inf=" << format_g17(last.div_inf) << '\n';
  return kExitOk;
}

inline int cmd_optimize(const RunConfig& cfg, const std::filesystem::path& out) {
  const ReducedProblem prob = build_problem(cfg);
  CsvTable hist({"iter", "J", "residual", "step"});
  const OptState st = projected_gradient_descent(prob, build_theta0(cfg), cfg.opt, [&](const OptState& s) {
    std::cout << "iter " << s.iterations << " J=" << format_g17(s.J_history.back())
              << " residual=" << format_g17(s.residual_history.back()) << '\n';
  });
  for (std::size_t k = 0; k < st.J_history.size(); ++k) {
    hist.row({double(k), st.J_history[k], st.residual_history[k], st.step_history[k]});
  }
  hist.write(out / "history.csv");
  dump_controls(st.theta, prob.time, out / "control");
  const Trajectory tr = prob.forward(st.theta);
  diagnostics_table(tr, st.theta, prob.cp).write(out / "diagnostics.csv");

  bool monotone = true;
  for (std::size_t k = 1; k < st.J_history.size(); ++k) monotone = monotone && st.J_history[k] <= st.J_history[k - 1];
  std::cout << "optimize: " << st.message << ", J " << format_g17(st.J_history.front()) << " -> "
            << format_g17(st.J_history.back()) << " in " << st.iterations << " iterations\n";
  if (!monotone) {
    std::cerr << "error: J_history is not monotone\n";
    return kExitTolerance;
  }
  if (!st.converged && st.message == "line search failed") {
    std::cerr << "error: line search failed before the optimality tolerance was met\n";
    return kExitTolerance;
  }
  return kExitOk;
}

inline int cmd_grad_check(const RunConfig& cfg, const std::filesystem::path& out) {
  const ReducedProblem prob = build_problem(cfg);
  const ControlSequence theta = build_theta0(cfg);
  CsvTable t({"direction", "eps", "fd", "adjoint", "rel_error"});
  bool ok = true;
  int d = 0;
  for (const auto& h : directions(cfg)) {
    double best = INFINITY;
    for (const auto& r : gradient_check(prob, theta, h)) {
      t.row({double(d), r.eps, r.fd, r.adjoint, r.rel_error});
      best = std::min(best, r.rel_error);
    }
    const bool pass = best <= cfg.check_tol;
    ok = ok && pass;
    std::cout << "direction " << d << ": best relative error " << format_g17(best) << ' ' << verdict(pass) << '\n';
    ++d;
  }
  t.write(out / "grad_check.csv");
  return ok ? kExitOk : kExitTolerance;
}

inline int cmd_taylor(const RunConfig& cfg, const std::filesystem::path& out) {
  const ReducedProblem prob = build_problem(cfg);
  const ControlSequence theta = build_theta0(cfg);
  const double J = prob.value(theta);
  CsvTable t({"direction", "eps", "remainder", "order"});
  bool ok = true;
  int d = 0;
  for (const auto& h : directions(cfg)) {
    const TaylorReport rep = taylor_test(prob, theta, h);
    for (std::size_t i = 0; i < rep.eps.size(); ++i) {
      t.row({double(d), rep.eps[i], rep.remainders[i], i < rep.orders.size() ? rep.orders[i] : NAN});
    }
    const double order = asymptotic_order(rep, 1e-12 * (1.0 + std::abs(J)));
    const bool pass = rep.exact || order >= cfg.check_min_order;
    ok = ok && pass;
    std::cout << "direction " << d << ": order " << (rep.exact ? "exact" : format_g17(order)) << ' '
              << verdict(pass) << '\n';
    ++d;
  }
  t.write(out / "taylor.csv");
  return ok ? kExitOk : kExitTolerance;
}

inline int cmd_linearized_check(const RunConfig& cfg, const std::filesystem::path& out) {
  const ReducedProblem prob = build_problem(cfg);
  const ControlSequence theta = build_theta0(cfg);
  const auto dirs = directions(cfg);
  const Trajectory base = prob.forward(theta);

  // Superposition is checked against a relative 1e-10 target, so the linear
  // solves must sit well below it.
  SolverSettings tight = cfg.solver;
  tight.cg_tol = std::min(tight.cg_tol, 1e-12);
  bool ok = true;
  CsvTable lin({"direction_a", "direction_b", "rel_defect"});
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    const std::size_t e = (d + 1) % dirs.size();
    const double defect = linearity_defect(base, dirs[d], dirs[e], tight);
    const bool pass = defect <= cfg.check_linearity_tol;
    ok = ok && pass;
    lin.row({double(d), double(e), defect});
    std::cout << "superposition " << d << "," << e << ": relative defect " << format_g17(defect) << ' '
              << verdict(pass) << '\n';
  }
  lin.write(out / "linearity.csv");

  CsvTable t({"direction", "eps", "remainder", "order"});
  int d = 0;
  for (const auto& h : dirs) {
    const TaylorReport rep = linearized_taylor_test(prob, theta, h);
    for (std::size_t i = 0; i < rep.eps.size(); ++i) {
      t.row({double(d), rep.eps[i], rep.remainders[i], i < rep.orders.size() ? rep.orders[i] : NAN});
    }
    // Solver error enters the remainder at about cg_tol * eps * ||DS h||.
    const double order = asymptotic_order(rep, 100.0 * cfg.solver.cg_tol * rep.eps.back() * rep.directional);
    const bool pass = rep.exact || order >= cfg.check_min_order;
    ok = ok && pass;
    std::cout << "direction " << d << ": remainder order " << (rep.exact ? "exact" : format_g17(order)) << ' '
              << verdict(pass) << '\n';
    ++d;
  }
  t.write(out / "linearized_check.csv");
  return ok ? kExitOk : kExitTolerance;
}

inline int cmd_adjoint_duality(const RunConfig& cfg, const std::filesystem::path& out) {
  const ReducedProblem prob = build_problem(cfg);
  const ControlSequence theta = build_theta0(cfg);
  const Trajectory base = prob.forward(theta);
  const AdjTrajectory adj = solve_adjoint(base, prob.cp.targets, cfg.solver);
  CsvTable t({"direction", "lhs", "rhs", "rel_mismatch"});
  bool ok = true;
  int d = 0;
  for (const auto& h : directions(cfg)) {
    const LinTrajectory lin = solve_linearized(base, h, cfg.solver);
    const auto [lhs, rhs] = duality_pairings(base, prob.cp.targets, adj, lin, h);
    const double denom = std::max(std::abs(lhs), std::abs(rhs));
    const double rel = denom > 0.0 ? std::abs(lhs - rhs) / denom : 0.0;
    const bool pass = rel <= cfg.check_tol;
    ok = ok && pass;
    t.row({double(d), lhs, rhs, rel});
    std::cout << "direction " << d << ": relative mismatch " << format_g17(rel) << ' ' << verdict(pass) << '\n';
    ++d;
  }
  t.write(out / "adjoint_duality.csv");
  return ok ? kExitOk : kExitTolerance;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Stokes / Cahn-Hilliard-Oono simulation and optimal control"};
  app.require_subcommand(1);
  std::string config_path, out_dir;

  using Handler = int (*)(const RunConfig&, const std::filesystem::path&);
  const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
      {"simulate", "forward solve; writes diagnostics.csv and fields/", detail::cmd_simulate},
      {"optimize", "projected gradient descent; writes history.csv, control/ and diagnostics.csv",
       detail::cmd_optimize},
      {"grad-check", "finite differences against the adjoint gradient; writes grad_check.csv",
       detail::cmd_grad_check},
      {"taylor", "Taylor remainder orders of the cost; writes taylor.csv", detail::cmd_taylor},
      {"linearized-check", "superposition and remainder order of the linearized solver",
       detail::cmd_linearized_check},
      {"adjoint-duality", "adjoint / linearized pairing identity; writes adjoint_duality.csv",
       detail::cmd_adjoint_duality},
  };
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Handler handler = nullptr;
  for (const auto& [name, help, fn] : commands) {
    if (app.got_subcommand(name)) handler = fn;
  }

  RunConfig cfg;
  try {
    cfg = parse_config(config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';

  const std::filesystem::path out(out_dir);
  try {
    std::filesystem::create_directories(out);
    write_file_atomic(out / ".write-test", "");
    std::filesystem::remove(out / ".write-test");
  } catch (const std::exception& e) {
    std::cerr << "error: output directory " << out << " is not writable: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    return handler(cfg, out);
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const NumericalError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace scho
