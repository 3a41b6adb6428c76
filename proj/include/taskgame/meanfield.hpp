#pragma once

#include <string>
#include <vector>

#include "taskgame/game.hpp"
#include "taskgame/schedule.hpp"
#include "taskgame/smith.hpp"
#include "taskgame/trajectory.hpp"
#include "taskgame/vec.hpp"

namespace taskgame {

// Synthetic stand-ins for the estimation mismatch xi(t): always
// mass-conserving (components sum to zero) with ||xi(t)||_inf <= amplitude.
// `table` replays a recorded trace (e.g. the empirical mismatch measured by
// the finite engine), held piecewise-constant between samples.
struct DisturbanceModel {
  enum class Kind { none, bounded_sinusoid, decaying, table };
  Kind kind = Kind::none;
  double amplitude = 0.0;
  double omega1 = 0.7;
  double omega2 = 1.3;
  double decay_rate = 0.05;          // `decaying` only
  std::vector<double> table_times;   // `table` only, strictly increasing
  std::vector<Vec> table_values;

  Vec eval(double t, int n) const;

  static DisturbanceModel none_model() { return DisturbanceModel{}; }
  static DisturbanceModel sinusoid(double amplitude);
  static DisturbanceModel decaying_sinusoid(double amplitude, double decay_rate);
  // Validates mass conservation per row (tol 1e-9) and removes the residual
  // mean so downstream conservation is exact; amplitude is taken from data.
  static DisturbanceModel from_table(std::vector<double> times,
                                     std::vector<Vec> values);
};

// xdot = lambda * V(p, x) + lambda * xi. Rejects xi with |sum xi| > 1e-12.
Vec edm_rhs(const LearningRule& rule, double lambda, std::span<const double> p,
            const PopulationState& x, const Vec& xi);

// EDM flow with the payoff signal frozen at a constant vector (the setting in
// which rate rescaling x_lambda(t) = x_1(lambda t) is exact). Returns rows
// sampled every `cadence` time units, including t = 0 and t = T.
std::vector<std::pair<double, PopulationState>> integrate_edm_frozen(
    const LearningRule& rule, double lambda, const Vec& p_const,
    PopulationState x0, double T, double h, double cadence);

// Coupled deterministic loop: qdot = w - F (capped), xdot = lambda V + lambda xi,
// p = q. RK4 with per-step simplex renormalization of x and clamping of q.
TrajectoryRecord run_closed_loop(const TaskDynamics& dyn,
                                 const LearningRule& rule,
                                 const RevisionSchedule& lambda_signal,
                                 const DisturbanceModel& disturbance,
                                 GameState q0, PopulationState x0, double T,
                                 double h, double cadence = 0.5);

// Right-hand side of the mismatch bound: c * sum_j x_j * eps_bar_j, replicated
// per component (the bound does not depend on i).
Vec xi_bound(const LearningRule& rule, const PopulationState& x,
             const Vec& eps_by_class);

}  // namespace taskgame
