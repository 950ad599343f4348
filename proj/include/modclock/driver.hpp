#pragma once

// Shared back end for the command line. Scenario runners read a flat config
// and return artifacts (a CSV table, pass/fail checks, summary fields);
// verify suites assemble named check lists; a bounded pool fans a sweep out
// over parameter values. Lives outside main() so tests can drive the same
// code paths in-process.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "modclock/config.hpp"
#include "modclock/io.hpp"
#include "modclock/scenarios.hpp"
#include "modclock/verify.hpp"

namespace modclock {

using ordered_json = nlohmann::ordered_json;

struct RunArtifacts {
  std::string name;  // artifact stem and scenario id
  CsvTable table;
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, double>> info;
  std::vector<std::pair<std::string, std::string>> labels;
};

inline bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

// ===== SCENARIO RUNNERS =====

inline RunArtifacts run_double_slit_scenario(const ConfigMap& cfg) {
  GridSystem grid = make_grid(cfg.get_int("grid.n", 256), cfg.get_double("grid.length", 16.0));
  DoubleSlitConfig base;
  base.center = cfg.get_double("slit.center", 6.0);
  base.sigma = cfg.get_double("slit.sigma", 0.25);
  base.ell = cfg.get_double("slit.separation", 4.0);
  int n_phi = cfg.get_int("slit.phases", 12);
  if (n_phi < 1) throw ConfigError("slit.phases must be positive");
  double tol_phase = cfg.get_double("tol.phase", 1e-6);
  double tol_poly = cfg.get_double("tol.poly", 1e-8);
  double tol_collapse = cfg.get_double("tol.collapse", 1e-6);

  CsvTable table({"phi", "re_moment", "im_moment"});
  std::vector<double> phis;
  double worst = 0.0;
  for (int j = 0; j < n_phi; ++j) {
    DoubleSlitConfig c = base;
    c.phi = -pi + 2.0 * pi * j / n_phi;
    phis.push_back(c.phi);
    Complex m1 = double_slit_moments(grid, c, 1).moment(1);
    table.add_row({c.phi, m1.real(), m1.imag()});
    worst = std::max(worst, std::abs(m1 - 0.5 * std::polar(1.0, c.phi)));
  }
  double poly_dev = polynomial_phase_insensitivity(grid, base, 4, phis);
  CollapseDemo demo = collapse_uncertainty_demo(grid, collapse_double_slit(1.3));

  RunArtifacts art{"doubleslit", std::move(table), {}, {}, {}};
  art.checks.push_back(check_upper("double-slit-phase-law", worst, tol_phase));
  art.checks.push_back(check_upper("polynomial-insensitivity", poly_dev, tol_poly));
  art.checks.push_back(
      check_upper("collapse-uncertainty", demo.after.max_abs_moment(), tol_collapse));
  art.info.emplace_back("separation", base.ell);
  art.info.emplace_back("sigma", base.sigma);
  return art;
}

inline RunArtifacts run_piston_scenario(const ConfigMap& cfg) {
  GridSystem grid = make_grid(cfg.get_int("grid.n", 256), cfg.get_double("grid.length", 16.0));
  int d = cfg.get_int("clock.d", 1024);
  double dt = cfg.get_double("clock.dt", 0.0025);
  PistonConfig pc;
  pc.displacement = cfg.get_double("piston.displacement", pi / 192.0);
  pc.wall_left = cfg.get_double("piston.wall_left", pc.wall_left);
  pc.wall_right = cfg.get_double("piston.wall_right", pc.wall_right);
  pc.wall_height = cfg.get_double("piston.wall_height", pc.wall_height);
  pc.wall_scale = cfg.get_double("piston.wall_scale", pc.wall_scale);
  pc.ramp_start = cfg.get_double("piston.ramp_start", pc.ramp_start);
  pc.ramp_end = cfg.get_double("piston.ramp_end", pc.ramp_end);
  pc.packet_center = cfg.get_double("piston.packet_center", pc.packet_center);
  pc.packet_momentum = cfg.get_double("piston.packet_momentum", pc.packet_momentum);
  pc.packet_width = cfg.get_double("piston.packet_width", pc.packet_width);

  PistonResult r = run_piston(grid, pc, d, d * dt);

  CsvTable table({"t", "re_mod_still", "im_mod_still", "re_mod_moved", "im_mod_moved"});
  for (int k = 0; k < d; ++k)
    table.add_row({k * dt, r.modular_series_still[k].real(), r.modular_series_still[k].imag(),
                   r.modular_series_moved[k].real(), r.modular_series_moved[k].imag()});

  RunArtifacts art{"piston", std::move(table), {r.phase_check, r.window_identity}, {}, {}};
  art.info.emplace_back("displacement", pc.displacement);
  art.info.emplace_back("revival_tick", r.revival_tick);
  art.info.emplace_back("revival_time", r.revival_time);
  art.info.emplace_back("revival_overlap", r.revival_overlap);
  art.info.emplace_back("phase_shift", r.phase_shift);
  art.info.emplace_back("predicted_shift", r.predicted_shift);
  art.info.emplace_back("max_wall_mass", r.max_wall_mass);
  return art;
}

inline SpinRegime parse_spin_regime(const std::string& name) {
  if (name == "resonant") return SpinRegime::resonant;
  if (name == "detuned_bare") return SpinRegime::detuned_bare;
  if (name == "detuned_compensated") return SpinRegime::detuned_compensated;
  throw ConfigError("unknown spin regime: " + name +
                    " (want resonant, detuned_bare or detuned_compensated)");
}

inline RunArtifacts run_spin_scenario(const ConfigMap& cfg) {
  std::string regime_name = cfg.get_string("spin.regime", "resonant");
  SpinRegime regime = parse_spin_regime(regime_name);
  double dt = cfg.get_double("clock.dt", 0.05);
  int tau_ticks = cfg.get_int("spin.tau_ticks", 272);
  int periods = cfg.get_int("spin.periods", 20);
  if (periods < 1) throw ConfigError("spin.periods must be positive");
  std::string shape = cfg.get_string("spin.shape", "rect");
  if (shape != "rect" && shape != "smooth")
    throw ConfigError("unknown pulse shape: " + shape + " (want rect or smooth)");

  SpinPulseConfig sc = spin_config_for(regime, dt, tau_ticks);
  if (shape == "smooth") sc.shape = PulseShape::smooth;
  int d = periods * static_cast<int>(std::lround(sc.pulse_period / dt));
  SpinRunResult r = run_spin(sc, d, dt, regime);

  CsvTable table({"t", "p_flip"});
  for (int k = 0; k < d; ++k) table.add_row({k * dt, r.p_flip[k]});

  RunArtifacts art{"spin", std::move(table), {r.regime_check, r.norm_check}, {}, {}};
  art.labels.emplace_back("regime", regime_name);
  art.labels.emplace_back("shape", shape);
  art.info.emplace_back("max_flip", r.max_flip);
  art.info.emplace_back("mean_sz", r.mean_sz);
  art.info.emplace_back("pulse_period", sc.pulse_period);
  return art;
}

inline RunArtifacts run_scenario(const ConfigMap& cfg) {
  std::string id = cfg.get_string("scenario", "");
  if (id == "doubleslit") return run_double_slit_scenario(cfg);
  if (id == "piston") return run_piston_scenario(cfg);
  if (id == "spin") return run_spin_scenario(cfg);
  throw ConfigError(id.empty() ? "config is missing the scenario key"
                               : "unknown scenario id: " + id);
}

// ===== VERIFY SUITES =====

// operator identity checks; d/dt size the clock behind the gate-drag pair
inline std::vector<CheckResult> identity_suite(int d, double dt) {
  if (d < 8) throw ConfigError("identity suite needs d >= 8");
  std::vector<CheckResult> out;
  {
    GridSystem grid = make_grid(64, 16.0);
    std::vector<std::function<double(double)>> pots = {
        [](double) { return 0.0; },
        [](double x) { return 0.5 * (x - 8.0) * (x - 8.0); },
        [](double x) {
          double u = (x - 8.0) * (x - 8.0) - 9.0;
          return u * u / 20.0;
        }};
    out.push_back(check_modular_momentum_identity(grid, pots, 4 * grid.dx()));
  }
  SpaceLayout s2 = SpaceLayout::single("S", 2);
  Matrix sz(2, 2), sx(2, 2);
  sz << 1, 0, 0, -1;
  sx << 0, 1, 1, 0;
  ClockModel clock(d, dt, 0.0, "A");
  Operator hs = Operator::hermitian(Matrix(0.6 * sz), s2);
  double period = clock.period();
  HamiltonianSpec driven(clock, hs, [s2, sx, period](double t) {
    return Operator::hermitian(Matrix((0.3 + 0.2 * std::cos(2.0 * pi * t / period)) * sx), s2);
  });
  out.push_back(check_modular_energy_identity(driven, 5));
  HamiltonianSpec constant(clock, hs, [s2, sx](double) {
    return Operator::hermitian(Matrix(0.7 * sx), s2);
  });
  out.push_back(
      check_modular_energy_identity(constant, 5, 1e-10, "modular-energy-identity-static"));
  {
    GridSystem grid = make_grid(64, 16.0);
    WeylCheckResult full = weyl_commutation_check(grid.position_op(), grid.momentum_op(),
                                                  4 * grid.dx(), 16 * grid.momentum_quantum());
    out.push_back(check_upper("shift-cell-commuting",
                              std::max(full.commutator_residual, full.relation_residual),
                              1e-10));
    WeylCheckResult half = weyl_commutation_check(grid.position_op(), grid.momentum_op(),
                                                  2 * grid.dx(), 16 * grid.momentum_quantum());
    out.push_back(check_upper("shift-cell-phase-relation", half.relation_residual, 1e-10));
    out.push_back(check_lower("shift-cell-half-step", half.commutator_residual, 0.5, false,
                              "half cell must fail to commute"));
  }
  return out;
}

// clock-reading flow at one resolution plus its tick halving
inline std::vector<CheckResult> timeflow_suite(int d, double dt) {
  if (d < 16) throw ConfigError("timeflow suite needs d >= 16");
  TimeFlowResult coarse = run_time_flow(d, d * dt);
  TimeFlowResult fine = run_time_flow(2 * d, d * dt);
  std::vector<CheckResult> out;
  out.push_back(coarse.fd);
  out.push_back(coarse.commutator);
  CheckResult fine_fd = fine.fd;
  fine_fd.id = "time-flow-fd-refined";
  out.push_back(fine_fd);
  out.push_back(check_upper("time-flow-halving",
                            fine.commutator.residual / coarse.commutator.residual, 0.6));
  return out;
}

inline std::vector<CheckResult> assemble_verify_suite(const std::string& suite, int d,
                                                      double dt) {
  if (suite == "identities") return identity_suite(d > 0 ? d : 12, dt > 0.0 ? dt : 0.2);
  if (suite == "timeflow") return timeflow_suite(d > 0 ? d : 256, dt > 0.0 ? dt : 0.1);
  if (suite == "all") {
    if (d > 0 || dt > 0.0)
      throw ConfigError("suite all runs its pinned geometry; drop --d/--dt");
    return run_verification_suite();
  }
  throw ConfigError("unknown suite: " + suite + " (want identities, timeflow or all)");
}

// ===== REPORTS =====

inline std::string checks_report(const std::vector<CheckResult>& checks) {
  std::size_t width = 2;
  for (const CheckResult& c : checks) width = std::max(width, c.id.size());
  std::string out;
  for (const CheckResult& c : checks) {
    char line[160];
    std::snprintf(line, sizeof line, "%-*s  residual %11.4e  tol %9.2e  %s%s\n", int(width),
                  c.id.c_str(), c.residual, c.tolerance, c.passed ? "pass" : "FAIL",
                  c.note.empty() ? "" : ("  (" + c.note + ")").c_str());
    out += line;
  }
  return out;
}

inline ordered_json checks_json(const std::vector<CheckResult>& checks) {
  ordered_json arr = ordered_json::array();
  for (const CheckResult& c : checks) {
    ordered_json e;
    e["id"] = c.id;
    e["residual"] = c.residual;
    e["tol"] = c.tolerance;
    e["status"] = c.passed ? "pass" : "fail";
    if (c.flagged) e["flagged"] = true;
    if (!c.note.empty()) e["note"] = c.note;
    arr.push_back(std::move(e));
  }
  return arr;
}

inline ordered_json artifacts_json(const RunArtifacts& art) {
  ordered_json s;
  s["scenario"] = art.name;
  ordered_json info;
  for (const auto& [key, value] : art.labels) info[key] = value;
  for (const auto& [key, value] : art.info) info[key] = value;
  s["info"] = std::move(info);
  s["checks"] = checks_json(art.checks);
  s["status"] = all_passed(art.checks) ? "pass" : "fail";
  return s;
}

// ===== EMISSION =====

inline int emit_run(const RunArtifacts& art, const std::filesystem::path& out_dir) {
  write_text_atomic(out_dir / (art.name + ".csv"), art.table.to_string());
  write_text_atomic(out_dir / "summary.json", artifacts_json(art).dump(2) + "\n");
  return all_passed(art.checks) ? 0 : 1;
}

inline int emit_verify(const std::string& suite, const std::vector<CheckResult>& checks,
                       const std::filesystem::path& out_dir) {
  ordered_json s;
  s["suite"] = suite;
  s["checks"] = checks_json(checks);
  s["status"] = all_passed(checks) ? "pass" : "fail";
  write_text_atomic(out_dir / "summary.json", s.dump(2) + "\n");
  return all_passed(checks) ? 0 : 1;
}

// ===== SWEEP =====

// one run per value, computed by a bounded pool; results keep input order
// and only the caller ever touches the filesystem
inline std::vector<RunArtifacts> sweep_scenario(const ConfigMap& base, const std::string& param,
                                                const std::vector<std::string>& values,
                                                int jobs = 0) {
  if (param.empty()) throw ConfigError("sweep needs a parameter name");
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const int n = static_cast<int>(values.size());
  if (jobs <= 0) jobs = 4;
  jobs = std::min(jobs, n);

  std::vector<std::optional<RunArtifacts>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> cursor{0};
  auto worker = [&]() {
    for (int i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) {
      try {
        ConfigMap cfg = base;
        cfg.set(param, values[i]);
        results[i] = run_scenario(cfg);
        cfg.reject_unused();  // a mistyped sweep parameter is never consumed
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  for (int i = 0; i < n; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);
  std::vector<RunArtifacts> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(std::move(*results[i]));
  return out;
}

inline int emit_sweep(const std::string& param, const std::vector<std::string>& values,
                      const std::vector<RunArtifacts>& runs,
                      const std::filesystem::path& out_dir) {
  bool ok = true;
  ordered_json entries = ordered_json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_%03zu", runs[i].name.c_str(), i);
    write_text_atomic(out_dir / (std::string(stem) + ".csv"), runs[i].table.to_string());
    ordered_json e = artifacts_json(runs[i]);
    e["value"] = values[i];
    e["csv"] = std::string(stem) + ".csv";
    ok = ok && all_passed(runs[i].checks);
    entries.push_back(std::move(e));
  }
  ordered_json s;
  s["sweep"] = param;
  s["runs"] = std::move(entries);
  s["status"] = ok ? "pass" : "fail";
  write_text_atomic(out_dir / "summary.json", s.dump(2) + "\n");
  return ok ? 0 : 1;
}

}  // namespace modclock
