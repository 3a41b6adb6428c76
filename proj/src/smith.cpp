#include "taskgame/smith.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace taskgame {

LearningRule LearningRule::smith(double varrho) {
  if (varrho <= 0.0) throw std::invalid_argument("LearningRule: varrho must be positive");
  LearningRule r;
  r.kind = Kind::smith;
  r.varrho = varrho;
  r.lipschitz_c = std::sqrt(2.0) * varrho;
  return r;
}

double rho(const LearningRule& rule, std::span<const double> p, int j, int i) {
  assert(i != j);
  return rule.varrho * std::max(0.0, p[i] - p[j]);
}

Vec mean_field_V(const LearningRule& rule, std::span<const double> p,
                 const PopulationState& x) {
  const int n = static_cast<int>(p.size());
  Vec v(n, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      const double flow = x.x[j] * rho(rule, p, j, i);  // mass j -> i
      v[i] += flow;
      v[j] -= flow;
    }
  }
  return v;
}

StationarityResult stationarity_check(const LearningRule& rule,
                                      std::span<const double> p,
                                      const PopulationState& x, double tol) {
  const Vec v = mean_field_V(rule, p, x);
  double worst_gain = 0.0;  // max unused payoff improvement weighted by mass
  const int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      worst_gain = std::max(worst_gain, x.x[i] * (p[j] - p[i]));
  return StationarityResult{norm_inf(v) <= tol, worst_gain <= tol};
}

}  // namespace taskgame
