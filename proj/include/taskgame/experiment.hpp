#pragma once

#include <string>
#include <vector>

#include "taskgame/config.hpp"
#include "taskgame/finite_sim.hpp"
#include "taskgame/trajectory.hpp"

namespace taskgame {

// Exit codes shared by run_experiment and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;
inline constexpr int kExitCheckFailure = 3;

struct SweepRow {
  int run_id = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double longrun_err = 0.0;  // max of ||q-q*||_2 + ||x-x*||_2 over final 20%
  double overshoot = 0.0;    // max_t ||q(t)||_inf
  int epochs = 0;            // rate decays taken (0 for a fixed rate)
  double wall_ms = 0.0;
  bool failed = false;
  std::string error;
};

struct SweepSummary {
  std::vector<SweepRow> rows;  // grid-major order: lambda index, then seed
  bool any_failed() const;
};

// Runs every lambda x seed combination (in parallel) and returns one row per
// combination; trajectories are optionally written under out_dir/run_<id>/.
SweepSummary sweep(const ExperimentConfig& cfg);

std::string sweep_summary_csv(const SweepSummary& summary);

// Dispatches on cfg.mode, writes outputs under cfg.out_dir (trajectory.csv,
// schedule.csv, report.txt/csv, summary.csv plus run_manifest.cfg), removes
// partial files on failure. Returns an exit code.
int run_experiment(const ExperimentConfig& cfg, bool quiet = false);

// Helpers shared with the test suites.
FiniteSimConfig make_finite_sim_config(const ExperimentConfig& cfg);
RevisionSchedule effective_schedule(const ExperimentConfig& cfg);

}  // namespace taskgame
