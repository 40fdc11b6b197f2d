#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "iflab/config.hpp"
#include "iflab/scenarios.hpp"

namespace {

std::string out_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("IFLAB_OUT"); env && *env) return env;
  return "";
}

int cmd_list() {
  for (const auto& s : iflab::scenario_registry())
    std::cout << s.name << "\n    " << s.description << "\n";
  return 0;
}

int cmd_check(const std::string& path) {
  try {
    iflab::RunConfig cfg = iflab::load_config(path);
    if (!iflab::find_scenario(cfg.scenario)) {
      std::cerr << "config error: unknown scenario '" << cfg.scenario << "'\n";
      return 2;
    }
    std::cout << "ok: scenario=" << cfg.scenario << " seed=" << cfg.seed
              << " hash=" << cfg.hash << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_run(const std::string& path, const std::string& out_flag, int workers) {
  iflab::RunConfig cfg;
  try {
    cfg = iflab::load_config(path);
    if (!iflab::find_scenario(cfg.scenario))
      throw iflab::ConfigError("unknown scenario: " + cfg.scenario);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (workers > 0) cfg.workers = workers;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    iflab::ScenarioResult res = iflab::run_scenario(cfg, out_root(out_flag));
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    // timestamps live only here, never in the data files
    const std::string root =
        out_root(out_flag).empty() ? cfg.out_dir : out_root(out_flag);
    const auto dir = std::filesystem::path(root) / cfg.scenario;
    std::time_t now = std::time(nullptr);
    char stamp[64];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ",
                  std::gmtime(&now));
    nlohmann::ordered_json meta;
    meta["timestamp"] = stamp;
    meta["elapsed_seconds"] = elapsed;
    meta["config_hash"] = cfg.hash;
    iflab::write_file(dir / "run_meta.json", meta.dump(2) + "\n");

    std::cout << "scenario " << cfg.scenario << " (seed " << cfg.seed
              << ", hash " << cfg.hash << ")\n";
    for (const auto& line : res.summary) std::cout << line << "\n";
    std::cout << (res.pass ? "RESULT: pass" : "RESULT: fail") << "\n";
    std::cout << "artifacts: " << dir.string() << "\n";
    return res.pass ? 0 : 1;
  } catch (const iflab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << cfg.scenario << " failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interface scaling-limit laboratory"};
  app.require_subcommand(1);

  std::string run_config, check_config, out_flag;
  int workers = 0;

  CLI::App* run = app.add_subcommand("run", "run a scenario from a config file");
  run->add_option("config", run_config, "path to the JSON run config")
      ->required();
  run->add_option("--out", out_flag,
                  "output root (overrides config; IFLAB_OUT works too)");
  run->add_option("--workers", workers,
                  "replica-level worker threads (default: config value)");

  CLI::App* list = app.add_subcommand("list", "list built-in scenarios");

  CLI::App* check =
      app.add_subcommand("check-config", "validate a config file and exit");
  check->add_option("config", check_config, "path to the JSON run config")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) return cmd_list();
  if (check->parsed()) return cmd_check(check_config);
  return cmd_run(run_config, out_flag, workers);
}
