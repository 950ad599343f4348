// modclock: scenario runs, parameter sweeps and identity suites for
// finite-dimensional clock models.
//
// exit codes: 0 all checks passed, 1 at least one check failed,
//             2 configuration or usage error

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modclock/driver.hpp"

namespace {

using namespace modclock;

void apply_max_dim_env() {
  const char* env = std::getenv("MODCLOCK_MAX_DIM");
  if (!env) return;
  char* end = nullptr;
  long cap = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || cap < 2)
    throw ConfigError(std::string("MODCLOCK_MAX_DIM is not a usable dimension cap: ") + env);
  set_max_dim(cap);
}

void print_info(const RunArtifacts& art) {
  for (const auto& [key, value] : art.labels) std::cout << "  " << key << " = " << value << "\n";
  for (const auto& [key, value] : art.info)
    std::cout << "  " << key << " = " << format_double(value) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-clock modular dynamics: scenario runs and identity checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::string regime;
  std::string suite = "all";
  std::string param;
  std::vector<std::string> values;
  double hbar_flag = 0.0;
  double dt_flag = 0.0;
  int d_flag = 0;
  int jobs = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_flag, "output directory (default: out)");
    cmd->add_option("--hbar", hbar_flag, "hbar for this invocation (default: 1)");
    cmd->add_option("--d", d_flag, "clock dimension override");
    cmd->add_option("--dt", dt_flag, "tick spacing override");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run one scenario from a config file");
  run_cmd->add_option("config", config_path, "flat key = value config file")->required();
  add_common(run_cmd);
  run_cmd->add_option("--regime", regime, "spin regime override");

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run a scenario once per value of one parameter");
  sweep_cmd->add_option("config", config_path, "flat key = value config file")->required();
  add_common(sweep_cmd);
  sweep_cmd->add_option("--regime", regime, "spin regime override");
  sweep_cmd->add_option("--param", param, "config key to vary")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values for --param")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--jobs", jobs, "worker cap (default 4)");

  CLI::App* verify_cmd = app.add_subcommand("verify", "run a named suite of identity checks");
  verify_cmd->add_option("--suite", suite, "identities, timeflow or all (default: all)");
  add_common(verify_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    apply_max_dim_env();

    if (app.got_subcommand(verify_cmd)) {
      if (verify_cmd->count("--hbar")) set_hbar(hbar_flag);
      std::filesystem::path out_dir = out_flag.empty() ? "out" : out_flag;
      std::vector<CheckResult> checks = assemble_verify_suite(suite, d_flag, dt_flag);
      std::cout << checks_report(checks);
      int code = emit_verify(suite, checks, out_dir);
      std::cout << "wrote " << (out_dir / "summary.json").string() << "\n";
      return code;
    }

    CLI::App* active = app.got_subcommand(run_cmd) ? run_cmd : sweep_cmd;
    ConfigMap cfg = ConfigMap::from_file(config_path);
    if (active->count("--d")) cfg.set("clock.d", std::to_string(d_flag));
    if (active->count("--dt")) cfg.set("clock.dt", format_double(dt_flag));
    if (active->count("--regime")) cfg.set("spin.regime", regime);
    if (active->count("--hbar")) cfg.set("hbar", format_double(hbar_flag));
    set_hbar(cfg.get_double("hbar", 1.0));
    std::filesystem::path out_dir =
        active->count("--out") ? out_flag : cfg.get_string("out", "out");

    if (active == run_cmd) {
      RunArtifacts art = run_scenario(cfg);
      cfg.reject_unused();
      std::cout << checks_report(art.checks);
      print_info(art);
      int code = emit_run(art, out_dir);
      std::cout << "wrote " << (out_dir / (art.name + ".csv")).string() << " and "
                << (out_dir / "summary.json").string() << "\n";
      return code;
    }

    std::vector<RunArtifacts> runs = sweep_scenario(cfg, param, values, jobs);
    for (std::size_t i = 0; i < runs.size(); ++i)
      std::cout << i << "  " << param << " = " << values[i] << "  "
                << (all_passed(runs[i].checks) ? "pass" : "FAIL") << "\n";
    int code = emit_sweep(param, values, runs, out_dir);
    std::cout << "wrote " << runs.size() << " csv files and "
              << (out_dir / "summary.json").string() << "\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
