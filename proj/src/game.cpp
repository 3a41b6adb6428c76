#include "taskgame/game.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace taskgame {

TaskDynamics TaskDynamics::uniform(int n, double R, double alpha, double beta,
                                   Vec w, double q_max) {
  TaskDynamics d;
  d.R.assign(n, R);
  d.alpha.assign(n, alpha);
  d.beta.assign(n, beta);
  d.w = std::move(w);
  d.q_max = q_max;
  return d;
}

void TaskDynamics::validate() const {
  std::ostringstream bad;
  const auto n_ = w.size();
  if (n_ < 2) bad << "need at least 2 tasks; ";
  if (R.size() != n_ || alpha.size() != n_ || beta.size() != n_)
    bad << "parameter vectors must all have length n; ";
  if (q_max <= 0.0) bad << "q_max must be positive; ";
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < R.size() && R[i] <= 0.0) bad << "R[" << i << "] <= 0; ";
    if (i < alpha.size() && alpha[i] <= 0.0) bad << "alpha[" << i << "] <= 0; ";
    if (i < beta.size() && beta[i] <= 0.0) bad << "beta[" << i << "] <= 0; ";
    if (w[i] <= 0.0) bad << "w[" << i << "] <= 0; ";
  }
  const std::string msg = bad.str();
  if (!msg.empty()) throw std::invalid_argument("TaskDynamics: " + msg);
}

PopulationState PopulationState::uniform(int n) {
  return PopulationState{Vec(n, 1.0 / n)};
}

void PopulationState::validate(double tol) const {
  double s = 0.0;
  for (double xi : x) {
    if (xi < -1e-12) throw std::invalid_argument("PopulationState: negative mass");
    s += xi;
  }
  if (std::abs(s - 1.0) > tol)
    throw std::invalid_argument("PopulationState: mass sums to " + std::to_string(s));
}

double rate_F(const TaskDynamics& dyn, int i, double q_i, double x_i) {
  if (q_i < 0.0) throw std::domain_error("rate_F: q_i < 0");
  if (x_i < 0.0) throw std::domain_error("rate_F: x_i < 0");
  return dyn.R[i] * std::tanh(0.5 * dyn.alpha[i] * q_i) * std::pow(x_i, dyn.beta[i]);
}

double rate_F_dq(const TaskDynamics& dyn, int i, double q_i, double x_i) {
  const double th = std::tanh(0.5 * dyn.alpha[i] * q_i);
  return dyn.R[i] * 0.5 * dyn.alpha[i] * (1.0 - th * th) * std::pow(x_i, dyn.beta[i]);
}

double rate_F_dx(const TaskDynamics& dyn, int i, double q_i, double x_i) {
  return dyn.R[i] * std::tanh(0.5 * dyn.alpha[i] * q_i) * dyn.beta[i] *
         std::pow(x_i, dyn.beta[i] - 1.0);
}

Vec game_rhs(const TaskDynamics& dyn, const GameState& q,
             const PopulationState& x) {
  const int n = dyn.n();
  Vec d(n);
  for (int i = 0; i < n; ++i) {
    // RK4 stage points may sit a hair outside the domain; evaluate F at the
    // clamped argument (F(0, .) = 0 makes this exact at the lower boundary)
    const double v =
        dyn.w[i] - rate_F(dyn, i, std::max(0.0, q.q[i]), std::max(0.0, x.x[i]));
    d[i] = (q.q[i] >= dyn.q_max) ? std::min(0.0, v) : v;
  }
  return d;
}

GameState integrate_game(const TaskDynamics& dyn, GameState q0,
                         const std::function<PopulationState(double)>& x_of_t,
                         double t0, double t1, double h) {
  if (h <= 0.0) throw std::invalid_argument("integrate_game: step must be positive");
  if (t1 < t0) throw std::invalid_argument("integrate_game: t1 < t0");
  const int n = dyn.n();
  GameState q = std::move(q0);
  const long steps = static_cast<long>(std::ceil((t1 - t0) / h - 1e-12));
  for (long k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    const double hk = std::min(h, t1 - t);
    const PopulationState xa = x_of_t(t);
    const PopulationState xb = x_of_t(t + 0.5 * hk);
    const PopulationState xc = x_of_t(t + hk);
    const Vec k1 = game_rhs(dyn, q, xa);
    GameState tmp{q.q};
    for (int i = 0; i < n; ++i) tmp.q[i] = q.q[i] + 0.5 * hk * k1[i];
    const Vec k2 = game_rhs(dyn, tmp, xb);
    for (int i = 0; i < n; ++i) tmp.q[i] = q.q[i] + 0.5 * hk * k2[i];
    const Vec k3 = game_rhs(dyn, tmp, xb);
    for (int i = 0; i < n; ++i) tmp.q[i] = q.q[i] + hk * k3[i];
    const Vec k4 = game_rhs(dyn, tmp, xc);
    for (int i = 0; i < n; ++i) {
      q.q[i] += hk / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      q.q[i] = std::clamp(q.q[i], 0.0, dyn.q_max);
    }
  }
  return q;
}

double x_star_of_q(const TaskDynamics& dyn, int i, double q_i) {
  if (q_i <= 0.0) throw std::domain_error("x_star_of_q: q_i must be positive");
  const double w = dyn.w[i];
  // F(q, 0) = 0 < w; expand the upper end until the sign flips.
  double lo = 0.0, hi = 1.0;
  while (rate_F(dyn, i, q_i, hi) < w) {
    hi *= 2.0;
    if (hi > kXStarCap)
      throw std::runtime_error("x_star_of_q: no root below bracket cap (task " +
                               std::to_string(i) + ")");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (rate_F(dyn, i, q_i, mid) < w ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Equilibrium solve_equilibrium(const TaskDynamics& dyn) {
  const int n = dyn.n();
  // h(q) = sum_i x*_i(q) - 1 is strictly decreasing; treat a bracket-cap
  // failure in any x*_i as h = +inf (it only happens for tiny q).
  const auto excess = [&](double q) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      try {
        s += x_star_of_q(dyn, i, q);
      } catch (const std::runtime_error&) {
        return std::numeric_limits<double>::infinity();
      }
    }
    return s - 1.0;
  };
  const double eps = 1e-9;
  double lo = eps, hi = dyn.q_max - eps;
  if (excess(hi) > 0.0)
    throw std::runtime_error(
        "solve_equilibrium: no interior equilibrium (total demand exceeds "
        "population even at q_max)");
  if (!(excess(lo) > 0.0))
    throw std::runtime_error("solve_equilibrium: no sign change on (0, q_max)");
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  Equilibrium eq;
  const double q_star = 0.5 * (lo + hi);
  eq.q_star.assign(n, q_star);
  eq.x_star.x.resize(n);
  for (int i = 0; i < n; ++i) eq.x_star.x[i] = x_star_of_q(dyn, i, q_star);
  return eq;
}

}  // namespace taskgame
