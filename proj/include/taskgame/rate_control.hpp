#pragma once

#include <span>

#include "taskgame/game.hpp"
#include "taskgame/smith.hpp"

namespace taskgame {

// Decreasing-rate clock controller: when the strategy-switching activity has
// nearly stalled (grad_x S . V >= -epsilon) and the current epoch has lasted
// at least tau / lambda_m, the revision rate decays to gamma * lambda_m and
// the new rate is broadcast to every agent.
struct ControllerConfig {
  double gamma = 0.0;    // decay factor, in (0, 1)
  double tau = 0.0;      // dwell constant, > 0
  double epsilon = 0.0;  // trigger threshold, > 0
  double lambda0 = 0.0;  // initial rate, > 0

  void validate() const;  // throws std::invalid_argument
};

struct ControllerState {
  int m = 0;             // epoch index
  double lambda_m = 0.0; // = lambda0 * gamma^m
  double t_m = 0.0;      // epoch start time

  static ControllerState initial(const ControllerConfig& cfg) {
    return ControllerState{0, cfg.lambda0, 0.0};
  }
};

// True iff grad_x S(p, x) . V(p, x) >= -epsilon.
bool evaluate_trigger(const LearningRule& rule, std::span<const double> p,
                      const PopulationState& x, double epsilon);

struct ControllerUpdate {
  ControllerState state;
  bool broadcast = false;  // true when a new (smaller) rate took effect
};

// Advances the epoch iff the trigger fired and the dwell t_now - t_m >=
// tau / lambda_m has elapsed; otherwise returns the state unchanged.
ControllerUpdate maybe_update(const ControllerState& state,
                              const ControllerConfig& cfg, double t_now,
                              bool trigger);

// Probability of at least one ring within one dwell interval: 1 - e^{-tau}.
double dwell_probability(double tau);

}  // namespace taskgame
