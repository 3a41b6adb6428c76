#include "taskgame/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "taskgame/meanfield.hpp"
#include "taskgame/passivity.hpp"

namespace taskgame {

namespace fs = std::filesystem;

FiniteSimConfig make_finite_sim_config(const ExperimentConfig& cfg) {
  FiniteSimConfig sim;
  sim.dyn = cfg.dyn;
  sim.rule = cfg.rule;
  sim.n_agents = cfg.n_agents;
  sim.p_edge = cfg.p_edge;
  sim.leader_fraction = cfg.leader_fraction;
  sim.q0 = cfg.q0;
  sim.x0 = cfg.x0;
  sim.estimates_start_true = cfg.estimates_start_true;
  sim.lambda = cfg.lambda;
  if (cfg.controller_enabled) sim.controller = cfg.controller;
  sim.horizon = cfg.horizon;
  sim.step = cfg.step;
  sim.cadence = cfg.cadence;
  sim.consensus_include_self = cfg.consensus_include_self;
  sim.leaders_observe_continuously = cfg.leaders_observe_continuously;
  sim.trigger_uses_leader_estimate = cfg.trigger_uses_leader_estimate;
  sim.check_xi_bound = cfg.check_xi_bound;
  return sim;
}

RevisionSchedule effective_schedule(const ExperimentConfig& cfg) {
  if (cfg.schedule) return *cfg.schedule;
  return RevisionSchedule::constant(cfg.lambda);
}

bool SweepSummary::any_failed() const {
  for (const auto& r : rows)
    if (r.failed) return true;
  return false;
}

namespace {

struct LongrunMetrics {
  double longrun_err = 0.0;
  double overshoot = 0.0;
};

LongrunMetrics longrun_metrics(const TrajectoryRecord& traj,
                               const Equilibrium& eq, double horizon) {
  LongrunMetrics m;
  const double t_from = 0.8 * horizon;
  for (const auto& row : traj.rows) {
    m.overshoot = std::max(m.overshoot, row.q_inf_norm);
    if (row.t >= t_from - 1e-9) {
      const double err =
          dist2(row.q, eq.q_star) + dist2(row.x, eq.x_star.x);
      m.longrun_err = std::max(m.longrun_err, err);
    }
  }
  return m;
}

void write_text_file(const fs::path& path, const std::string& text,
                     std::vector<fs::path>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  written.push_back(path);
}

std::string schedule_csv(const std::vector<EpochRecord>& epochs) {
  std::ostringstream os;
  os << "m,t_m,lambda_m\n";
  for (const auto& e : epochs)
    os << e.m << ',' << format_double(e.t_m) << ',' << format_double(e.lambda_m)
       << '\n';
  return os.str();
}

struct SweepRunOutcome {
  SweepRow row;
  TrajectoryRecord traj;
  std::vector<EpochRecord> epochs;
};

SweepRunOutcome sweep_one(const ExperimentConfig& cfg, int run_id, double lambda,
                          std::uint64_t seed, const Equilibrium& eq) {
  SweepRunOutcome out;
  out.row.run_id = run_id;
  out.row.seed = seed;
  out.row.lambda = lambda;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const double horizon = cfg.horizon_over_lambda > 0.0
                               ? cfg.horizon_over_lambda / lambda
                               : cfg.horizon;
    if (cfg.sweep_engine == "finite") {
      ExperimentConfig run_cfg = cfg;
      run_cfg.lambda = lambda;
      run_cfg.horizon = horizon;
      FiniteSimConfig sim = make_finite_sim_config(run_cfg);
      FiniteRunResult res = run_finite(sim, seed);
      out.traj = std::move(res.traj);
      out.epochs = std::move(res.epochs);
      out.row.epochs = static_cast<int>(out.epochs.size()) - 1;
    } else {
      out.traj = run_closed_loop(cfg.dyn, cfg.rule,
                                 RevisionSchedule::constant(lambda),
                                 cfg.disturbance, GameState{cfg.q0},
                                 PopulationState{cfg.x0}, horizon, cfg.step,
                                 cfg.cadence);
      out.row.epochs = 0;
    }
    const LongrunMetrics m = longrun_metrics(out.traj, eq,
                                             cfg.horizon_over_lambda > 0.0
                                                 ? cfg.horizon_over_lambda / lambda
                                                 : cfg.horizon);
    out.row.longrun_err = m.longrun_err;
    out.row.overshoot = m.overshoot;
  } catch (const std::exception& e) {
    out.row.failed = true;
    out.row.error = e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  out.row.wall_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  return out;
}

}  // namespace

SweepSummary sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_lambda_grid.empty())
    throw std::invalid_argument("sweep: empty lambda grid");
  if (cfg.sweep_seeds.empty())
    throw std::invalid_argument("sweep: empty seed list");
  const Equilibrium eq = solve_equilibrium(cfg.dyn);

  std::vector<std::pair<double, std::uint64_t>> combos;
  for (double l : cfg.sweep_lambda_grid)
    for (std::uint64_t s : cfg.sweep_seeds) combos.emplace_back(l, s);

  std::vector<SweepRunOutcome> outcomes(combos.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(combos.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (std::size_t k = next.fetch_add(1); k < combos.size();
           k = next.fetch_add(1))
        outcomes[k] = sweep_one(cfg, static_cast<int>(k), combos[k].first,
                                combos[k].second, eq);
    });
  for (auto& th : pool) th.join();

  SweepSummary summary;
  summary.rows.reserve(outcomes.size());
  if (cfg.sweep_write_trajectories) {
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      if (outcomes[k].row.failed) continue;
      std::ostringstream dir;
      dir << "run_" << std::setw(3) << std::setfill('0') << k;
      const fs::path run_dir = fs::path(cfg.out_dir) / dir.str();
      fs::create_directories(run_dir);
      std::ofstream tf(run_dir / "trajectory.csv", std::ios::binary);
      write_trajectory_csv(outcomes[k].traj, tf);
      if (!outcomes[k].epochs.empty()) {
        std::ofstream sf(run_dir / "schedule.csv", std::ios::binary);
        sf << schedule_csv(outcomes[k].epochs);
      }
    }
  }
  for (auto& o : outcomes) summary.rows.push_back(std::move(o.row));
  return summary;
}

std::string sweep_summary_csv(const SweepSummary& summary) {
  std::ostringstream os;
  os << "run_id,seed,lambda,longrun_err,overshoot,epochs,wall_ms,error\n";
  for (const auto& r : summary.rows) {
    os << r.run_id << ',' << r.seed << ',' << format_double(r.lambda) << ','
       << format_double(r.longrun_err) << ',' << format_double(r.overshoot)
       << ',' << r.epochs << ',' << format_double(r.wall_ms) << ','
       << (r.failed ? r.error : std::string{}) << '\n';
  }
  return os.str();
}

int run_experiment(const ExperimentConfig& cfg, bool quiet) {
  std::vector<fs::path> written;
  try {
    fs::create_directories(cfg.out_dir);
    const fs::path out_dir(cfg.out_dir);
    write_text_file(out_dir / "run_manifest.cfg", manifest_text(cfg), written);

    switch (cfg.mode) {
      case RunMode::meanfield: {
        cfg.dyn.validate();
        const TrajectoryRecord traj = run_closed_loop(
            cfg.dyn, cfg.rule, effective_schedule(cfg), cfg.disturbance,
            GameState{cfg.q0}, PopulationState{cfg.x0}, cfg.horizon, cfg.step,
            cfg.cadence);
        std::ostringstream os;
        write_trajectory_csv(traj, os);
        write_text_file(out_dir / "trajectory.csv", os.str(), written);
        if (!quiet)
          std::cerr << "meanfield run: " << traj.rows.size() << " rows -> "
                    << (out_dir / "trajectory.csv").string() << "\n";
        return kExitOk;
      }
      case RunMode::finite: {
        const FiniteSimConfig sim = make_finite_sim_config(cfg);
        const FiniteRunResult res = run_finite(sim, cfg.seed);
        std::ostringstream os;
        write_trajectory_csv(res.traj, os);
        write_text_file(out_dir / "trajectory.csv", os.str(), written);
        if (cfg.controller_enabled)
          write_text_file(out_dir / "schedule.csv", schedule_csv(res.epochs),
                          written);
        if (!quiet) {
          std::cerr << "finite run: " << res.traj.rows.size() << " rows, "
                    << res.ring_count << " rings, " << res.epochs.size() - 1
                    << " rate decays, graph seed " << res.graph_seed_used << "\n";
          if (res.substoch_events > 0)
            std::cerr << "  note: " << res.substoch_events
                      << " revision draws had switch mass > 1 (normalized)\n";
          if (cfg.check_xi_bound)
            std::cerr << "  mismatch bound: " << res.xi_violations
                      << " violations over " << res.xi_checks
                      << " checks (worst slack " << res.xi_worst_slack << ")\n";
        }
        return kExitOk;
      }
      case RunMode::sweep: {
        const SweepSummary summary = sweep(cfg);
        write_text_file(out_dir / "summary.csv", sweep_summary_csv(summary),
                        written);
        if (!quiet)
          std::cerr << "sweep: " << summary.rows.size() << " runs -> "
                    << (out_dir / "summary.csv").string() << "\n";
        return summary.any_failed() ? kExitRuntimeError : kExitOk;
      }
      case RunMode::passivity_report: {
        cfg.dyn.validate();
        const PassivityReport rep = verify_passivity(
            cfg.dyn, cfg.rule, cfg.passivity_samples, cfg.seed);
        write_text_file(out_dir / "report.txt", rep.to_text(), written);
        write_text_file(out_dir / "report.csv", rep.to_csv(), written);
        if (!quiet) std::cerr << rep.to_text();
        return rep.all_pass() ? kExitOk : kExitCheckFailure;
      }
    }
    return kExitRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    return kExitRuntimeError;
  }
}

}  // namespace taskgame
