#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "taskgame/game.hpp"
#include "taskgame/smith.hpp"
#include "taskgame/vec.hpp"

namespace taskgame {

// Storage pair certifying the dissipativity structure of the closed loop:
//   L(q, x) = sum_i integral_{x*_i(q_i)}^{x_i} (F_i(q_i, s) - w_i) ds
//   S(p, x) = (varrho / 2) sum_{i,j} x_j max(0, p_i - p_j)^2   (Smith rule)
// L vanishes exactly on {F(q,x) = w}; S vanishes exactly on {V(p,x) = 0}.

// Interior margin used when trajectory evaluation has to clamp q away from
// {0, q_max}, where L is not defined.
inline constexpr double kInteriorMargin = 1e-9;

// Closed form for the shipped rate family. Throws std::domain_error if any
// q_i is outside (0, q_max).
double storage_L(const TaskDynamics& dyn, const GameState& q,
                 const PopulationState& x);

// Generic route: bisection x*_i + composite Simpson (64 panels) per task.
double storage_L_quadrature(const TaskDynamics& dyn, const GameState& q,
                            const PopulationState& x);

// d L / d q_i, analytic for the shipped family (the boundary term of the
// moving lower limit vanishes because F(q, x*(q)) = w).
Vec grad_q_L(const TaskDynamics& dyn, const GameState& q,
             const PopulationState& x);

// d L / d x_i = F_i(q_i, x_i) - w_i.
Vec grad_x_L(const TaskDynamics& dyn, const GameState& q,
             const PopulationState& x);

double storage_S(const LearningRule& rule, std::span<const double> p,
                 const PopulationState& x);

// (grad_p S, grad_x S); grad_p S coincides with mean_field_V identically.
std::pair<Vec, Vec> grad_S(const LearningRule& rule, std::span<const double> p,
                           const PopulationState& x);

struct StorageEvaluation {
  double L_value = 0.0;
  double S_value = 0.0;
  double gradq_L_dot_qdot = 0.0;
  double gradx_S_dot_V = 0.0;
};

StorageEvaluation evaluate_storage(const TaskDynamics& dyn,
                                   const LearningRule& rule, const GameState& q,
                                   const PopulationState& x);

// One numeric passivity check; `violations` counts sampled states where the
// condition failed, `worst` is the most adverse margin seen.
struct CheckResult {
  std::string name;
  long samples = 0;
  long violations = 0;
  double worst = 0.0;
  bool pass() const { return violations == 0; }
};

struct PassivityReport {
  CheckResult grad_identity_L;   // dL/dx_i == F_i - w_i (finite differences)
  CheckResult sign_L;            // grad_q L . (w - F) <= 0
  CheckResult grad_identity_S;   // grad_p S == V
  CheckResult sign_S;            // grad_x S . V <= 0
  CheckResult zero_set_L;        // L ~ 0  <=>  F ~ w   (calibrated pairs)
  CheckResult zero_set_S;        // S ~ 0  <=>  V ~ 0   (calibrated pairs)
  bool all_pass() const;
  std::string to_text() const;
  std::string to_csv() const;
};

// Random-interior sampling plus constructed near-equilibrium states (so the
// zero-set directions are exercised non-vacuously). Failures are reported,
// never thrown.
PassivityReport verify_passivity(const TaskDynamics& dyn,
                                 const LearningRule& rule, int samples,
                                 std::uint64_t seed);

}  // namespace taskgame
