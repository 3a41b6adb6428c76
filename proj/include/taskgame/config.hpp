#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taskgame/game.hpp"
#include "taskgame/meanfield.hpp"
#include "taskgame/rate_control.hpp"
#include "taskgame/schedule.hpp"
#include "taskgame/smith.hpp"

namespace taskgame {

inline constexpr const char* kVersionString = "taskgame 1.0.0";

enum class RunMode { meanfield, finite, sweep, passivity_report };

const char* to_string(RunMode mode);
std::optional<RunMode> parse_mode(const std::string& text);

// Fully resolved experiment description. Everything a run needs is in here;
// re-running an identical config (same seed) reproduces output files byte for
// byte, except wall-clock columns.
struct ExperimentConfig {
  RunMode mode = RunMode::meanfield;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  double horizon = 0.0;
  double step = 0.01;
  double cadence = 0.5;

  TaskDynamics dyn;
  LearningRule rule = LearningRule::smith(1.0);

  int n_agents = 0;
  double p_edge = 0.1;
  double leader_fraction = 0.1;

  Vec q0;
  Vec x0;
  bool estimates_start_true = false;

  double lambda = 1.0;
  std::string schedule_path;                  // optional replay
  std::optional<RevisionSchedule> schedule;   // resolved from schedule_path

  bool controller_enabled = false;
  ControllerConfig controller{0.8, 0.2, 0.01, 1.0};

  bool consensus_include_self = false;
  bool leaders_observe_continuously = false;
  bool trigger_uses_leader_estimate = false;
  bool check_xi_bound = true;

  DisturbanceModel disturbance;
  std::string disturbance_table_path;

  std::string sweep_engine = "meanfield";  // or "finite"
  Vec sweep_lambda_grid;
  std::vector<std::uint64_t> sweep_seeds;
  double horizon_over_lambda = 0.0;  // when > 0, per-run horizon = this / lambda
  bool sweep_write_trajectories = true;

  int passivity_samples = 1000;
};

struct ConfigIssue {
  int line = 0;  // 0 when the issue is not tied to a source line
  std::string field;
  std::string message;
};

struct LoadResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigIssue> issues;  // every problem found, not just the first
  bool ok() const { return config.has_value(); }
};

// Line-oriented `key = value` grammar with bracketed [section] headers,
// comma-separated arrays and '#' comments; see README for the full grammar.
LoadResult load_config(const std::string& path);
LoadResult parse_config_text(const std::string& text);

// Canonical echo of a resolved config (defaults included); valid input for
// load_config, which is how runs are reproduced from their manifests.
std::string manifest_text(const ExperimentConfig& cfg);

}  // namespace taskgame
