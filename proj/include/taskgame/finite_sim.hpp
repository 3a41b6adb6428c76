#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "taskgame/consensus.hpp"
#include "taskgame/game.hpp"
#include "taskgame/rate_control.hpp"
#include "taskgame/rng.hpp"
#include "taskgame/schedule.hpp"
#include "taskgame/smith.hpp"
#include "taskgame/trajectory.hpp"

namespace taskgame {

struct AgentRecord {
  int strategy = 0;      // index in [0, n)
  double next_ring = 0;  // time of the agent's next alarm ring
  bool leader = false;
};

// Full state of a finite-N run; counts[i] is the number of agents on
// strategy i and always sums to N exactly.
struct SimulationState {
  double t = 0.0;
  GameState q;
  std::vector<AgentRecord> agents;
  EstimateBank bank;
  std::vector<long> counts;
  RevisionSchedule schedule;  // realized rate segments so far

  PopulationState empirical_x() const;
};

// Exact interarrival sampling for a piecewise-constant intensity: consume
// integral(lambda dt) segment by segment until it reaches an Exp(1) draw.
// No thinning; the last rate extends past the final breakpoint.
double next_ring_time(const RevisionSchedule& schedule, double t_now,
                      double exp1_draw);
double sample_next_ring(const RevisionSchedule& schedule, double t_now,
                        Rng& rng);

// One revision draw for a ringing agent: switch j -> i with probability
// rho_ji(p_hat), stay with the remaining mass. If the switch probabilities
// sum above 1 the draw is normalized (and counted via substoch_events).
// Updates counts together with the agent's strategy. Returns the new strategy.
int revise_agent(AgentRecord& agent, const LearningRule& rule,
                 std::span<const double> p_hat, Rng& rng,
                 std::vector<long>& counts, long* substoch_events = nullptr);

// Empirical analogue of the mean-field mismatch: per-class averages of
// rho(p_hat) against rho(p_true), weighted by the empirical state; empty
// classes contribute zero.
Vec measure_xi(const SimulationState& state, const LearningRule& rule);

struct FiniteSimConfig {
  TaskDynamics dyn;
  LearningRule rule;
  int n_agents = 0;
  double p_edge = 0.1;
  double leader_fraction = 0.1;
  Vec q0;
  Vec x0;  // fractions; rounded to integer counts summing to N
  bool estimates_start_true = false;  // default: all estimates start at zero
  double lambda = 1.0;                // fixed rate when no controller is set
  std::optional<ControllerConfig> controller;
  double horizon = 0.0;
  double step = 0.01;     // RK4 step bound for the q flow between events
  double cadence = 0.5;   // trajectory output spacing
  bool consensus_include_self = false;
  bool leaders_observe_continuously = false;  // ring-time q instead of bank row
  bool trigger_uses_leader_estimate = false;  // else controller sees true (q, x)
  bool check_xi_bound = true;  // evaluate the mismatch bound at every row
};

struct EpochRecord {
  int m = 0;
  double t_m = 0.0;
  double lambda_m = 0.0;
  // share of agents that rang at least once during the epoch (filled when the
  // epoch completes; the trailing epoch reports the share up to the horizon)
  double ring_fraction = 0.0;
};

struct FiniteRunResult {
  TrajectoryRecord traj;
  std::vector<EpochRecord> epochs;  // epoch 0 = initial rate
  long ring_count = 0;
  long substoch_events = 0;
  long xi_checks = 0;
  long xi_violations = 0;
  double xi_worst_slack = 0.0;  // min over rows of (bound - |xi|); >= 0 iff clean
  std::uint64_t graph_seed_used = 0;
  SimulationState final_state;
};

// Event-driven hybrid loop: per-agent Poisson rings from a priority queue,
// RK4 game flow between events with the empirical x held constant, consensus
// rounds (and controller checks) at integer times, rows at the output
// cadence. Bit-reproducible from (config, seed); sub-seeds are seed (graph),
// seed+1 (leaders), seed+2 (simulation stream). Within the stream the order
// is: initial ring draws in agent order, then per event a clock draw followed
// by a revision draw, then resampling draws in agent order at each broadcast.
FiniteRunResult run_finite(const FiniteSimConfig& cfg, std::uint64_t seed);

}  // namespace taskgame
