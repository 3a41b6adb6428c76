#pragma once

#include <span>

#include "taskgame/game.hpp"
#include "taskgame/vec.hpp"

namespace taskgame {

// Pairwise-comparison learning rule. Only the Smith rule ships:
//   rho_ji(p) = varrho * max(0, p_i - p_j)  for i != j,
// which is Lipschitz in p with per-pair constant sqrt(2) * varrho.
struct LearningRule {
  enum class Kind { smith };
  Kind kind = Kind::smith;
  double varrho = 0.0;
  double lipschitz_c = 0.0;

  static LearningRule smith(double varrho);
};

// Switch probability from strategy j to i (i != j). Payoff-only rule.
double rho(const LearningRule& rule, std::span<const double> p, int j, int i);

// Mean switch-rate field V_i(p, x) = sum_j x_j rho_ji(p) - x_i sum_j rho_ij(p),
// accumulated pairwise so mass conservation holds to rounding.
Vec mean_field_V(const LearningRule& rule, std::span<const double> p,
                 const PopulationState& x);

struct StationarityResult {
  bool v_zero;  // ||V(p, x)||_inf <= tol
  bool nash;    // max_{i,j} x_i (q_j - q_i) <= tol
};

// Nash-stationarity probe with p = q; for the Smith rule the two flags agree
// in the tol -> 0 limit.
StationarityResult stationarity_check(const LearningRule& rule,
                                      std::span<const double> p,
                                      const PopulationState& x,
                                      double tol = 1e-8);

}  // namespace taskgame
