#include "taskgame/rate_control.hpp"

#include <cmath>
#include <stdexcept>

#include "taskgame/passivity.hpp"

namespace taskgame {

void ControllerConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("ControllerConfig: gamma must be in (0, 1)");
  if (tau <= 0.0) throw std::invalid_argument("ControllerConfig: tau must be positive");
  if (epsilon <= 0.0)
    throw std::invalid_argument("ControllerConfig: epsilon must be positive");
  if (lambda0 <= 0.0)
    throw std::invalid_argument("ControllerConfig: lambda0 must be positive");
}

bool evaluate_trigger(const LearningRule& rule, std::span<const double> p,
                      const PopulationState& x, double epsilon) {
  const auto [gp, gx] = grad_S(rule, p, x);
  const Vec v = mean_field_V(rule, p, x);
  double inner = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) inner += gx[i] * v[i];
  return inner >= -epsilon;
}

ControllerUpdate maybe_update(const ControllerState& state,
                              const ControllerConfig& cfg, double t_now,
                              bool trigger) {
  const double dwell = cfg.tau / state.lambda_m;
  if (!trigger || t_now - state.t_m + 1e-9 < dwell)
    return ControllerUpdate{state, false};
  ControllerState next;
  next.m = state.m + 1;
  next.lambda_m = cfg.lambda0 * std::pow(cfg.gamma, next.m);
  next.t_m = t_now;
  return ControllerUpdate{next, true};
}

double dwell_probability(double tau) {
  if (tau <= 0.0) throw std::invalid_argument("dwell_probability: tau must be positive");
  return -std::expm1(-tau);
}

}  // namespace taskgame
