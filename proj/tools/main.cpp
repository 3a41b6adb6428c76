#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "taskgame/config.hpp"
#include "taskgame/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "task-allocation population game simulator: mean-field and finite-N "
      "engines, consensus payoff estimation, decaying revision-rate controller, "
      "passivity checks"};
  app.set_version_flag("--version", taskgame::kVersionString);

  std::string config_path;
  std::string out_override;
  std::string mode_override;
  std::uint64_t seed_override = 0;
  bool have_seed = false;
  bool quiet = false;

  app.add_option("--config", config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_override, "override the config seed")
      ->trigger_on_parse()
      ->each([&](const std::string&) { have_seed = true; });
  app.add_option("--out", out_override, "override the output directory");
  app.add_option("--mode", mode_override,
                 "override the run mode (meanfield|finite|sweep|passivity-report)");
  app.add_flag("--quiet", quiet, "suppress progress output");

  CLI11_PARSE(app, argc, argv);

  taskgame::LoadResult loaded = taskgame::load_config(config_path);
  if (!loaded.ok()) {
    for (const auto& issue : loaded.issues) {
      std::cerr << config_path;
      if (issue.line > 0) std::cerr << ":" << issue.line;
      if (!issue.field.empty()) std::cerr << " [" << issue.field << "]";
      std::cerr << " " << issue.message << "\n";
    }
    return taskgame::kExitConfigError;
  }

  taskgame::ExperimentConfig cfg = *loaded.config;
  if (have_seed) cfg.seed = seed_override;
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (!mode_override.empty()) {
    const auto m = taskgame::parse_mode(mode_override);
    if (!m) {
      std::cerr << "unknown mode '" << mode_override << "'\n";
      return taskgame::kExitConfigError;
    }
    cfg.mode = *m;
  }

  return taskgame::run_experiment(cfg, quiet);
}
