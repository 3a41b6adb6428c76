#pragma once

#include <functional>

#include "taskgame/vec.hpp"

namespace taskgame {

// Task-allocation game: per-task job levels q driven by
//   dq_i/dt = -F_i(q_i, x_i) + w_i,   capped so q_i stays in [0, q_max],
// with the completion-rate family
//   F_i(q_i, x_i) = R_i * (e^{a_i q_i} - 1)/(e^{a_i q_i} + 1) * x_i^{b_i}.
// The sigmoid factor equals tanh(a_i q_i / 2), which is what the code uses.
struct TaskDynamics {
  Vec R;      // rate scale per task, > 0
  Vec alpha;  // sigmoid sharpness per task, > 0
  Vec beta;   // crowd exponent per task, > 0
  Vec w;      // job inflow per task, > 0
  double q_max = 0.0;

  int n() const { return static_cast<int>(w.size()); }

  // Same (R, alpha, beta) for every task.
  static TaskDynamics uniform(int n, double R, double alpha, double beta, Vec w,
                              double q_max);

  // Throws std::invalid_argument listing every violated constraint.
  void validate() const;
};

struct GameState {
  Vec q;
};

struct PopulationState {
  Vec x;

  static PopulationState uniform(int n);
  // |sum - 1| <= tol and x_i >= -1e-12, else throws.
  void validate(double tol = 1e-9) const;
};

struct Equilibrium {
  Vec q_star;  // all components equal
  PopulationState x_star;
};

// Completion rate F_i. Domain error if q_i < 0 or x_i < 0.
double rate_F(const TaskDynamics& dyn, int i, double q_i, double x_i);

// dF_i/dq_i and dF_i/dx_i (interior derivatives of the shipped family).
double rate_F_dq(const TaskDynamics& dyn, int i, double q_i, double x_i);
double rate_F_dx(const TaskDynamics& dyn, int i, double q_i, double x_i);

// Per-task time derivative of q, with the min{0, .} clause applied at the cap.
Vec game_rhs(const TaskDynamics& dyn, const GameState& q,
             const PopulationState& x);

// Fixed-step RK4 flow of game_rhs from t0 to t1 under the population signal
// x_of_t; q is clamped into [0, q_max] after every step. Deterministic.
GameState integrate_game(const TaskDynamics& dyn, GameState q0,
                         const std::function<PopulationState(double)>& x_of_t,
                         double t0, double t1, double h);

// Bracket cap for the x*(q) root search; parameters needing a larger bracket
// are treated as violating the monotonicity/divergence assumptions.
inline constexpr double kXStarCap = 1e6;

// Unique x with F_i(q_i, x) = w_i, by bisection with geometric bracket
// expansion. Throws std::runtime_error if the bracket exceeds kXStarCap.
double x_star_of_q(const TaskDynamics& dyn, int i, double q_i);

// Common-q equilibrium: bisection on h(q) = sum_i x*_i(q) - 1 over (0, q_max).
// Throws std::runtime_error if no sign change exists (no interior equilibrium).
Equilibrium solve_equilibrium(const TaskDynamics& dyn);

}  // namespace taskgame
