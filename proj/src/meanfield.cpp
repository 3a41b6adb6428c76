#include "taskgame/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "taskgame/passivity.hpp"

namespace taskgame {

Vec DisturbanceModel::eval(double t, int n) const {
  Vec xi(n, 0.0);
  switch (kind) {
    case Kind::none:
      break;
    case Kind::bounded_sinusoid:
    case Kind::decaying: {
      // Up to two adjacent-difference modes; each component receives at most
      // two half-amplitude terms, so ||xi||_inf <= amplitude by construction.
      double scale = 0.5 * amplitude;
      if (kind == Kind::decaying) scale *= std::exp(-decay_rate * t);
      const double s1 = scale * std::sin(omega1 * t);
      xi[0] += s1;
      xi[1] -= s1;
      if (n >= 3) {
        const double s2 = scale * std::sin(omega2 * t);
        xi[1] += s2;
        xi[2] -= s2;
      }
      break;
    }
    case Kind::table: {
      if (table_times.empty()) break;
      const auto it =
          std::upper_bound(table_times.begin(), table_times.end(), t);
      const auto idx =
          std::max<std::ptrdiff_t>(0, (it - table_times.begin()) - 1);
      xi = table_values[static_cast<std::size_t>(idx)];
      break;
    }
  }
  return xi;
}

DisturbanceModel DisturbanceModel::sinusoid(double amplitude) {
  DisturbanceModel d;
  d.kind = Kind::bounded_sinusoid;
  d.amplitude = amplitude;
  return d;
}

DisturbanceModel DisturbanceModel::decaying_sinusoid(double amplitude,
                                                     double decay_rate) {
  DisturbanceModel d;
  d.kind = Kind::decaying;
  d.amplitude = amplitude;
  d.decay_rate = decay_rate;
  return d;
}

DisturbanceModel DisturbanceModel::from_table(std::vector<double> times,
                                              std::vector<Vec> values) {
  if (times.size() != values.size() || times.empty())
    throw std::invalid_argument("DisturbanceModel: table shape mismatch");
  DisturbanceModel d;
  d.kind = Kind::table;
  for (std::size_t r = 0; r < times.size(); ++r) {
    if (r > 0 && !(times[r] > times[r - 1]))
      throw std::invalid_argument("DisturbanceModel: table times must increase");
    Vec& row = values[r];
    const double m = sum(row);
    if (std::abs(m) > 1e-9)
      throw std::invalid_argument(
          "DisturbanceModel: table row violates mass conservation");
    const double shift = m / static_cast<double>(row.size());
    for (double& v : row) v -= shift;
    d.amplitude = std::max(d.amplitude, norm_inf(row));
  }
  d.table_times = std::move(times);
  d.table_values = std::move(values);
  return d;
}

Vec edm_rhs(const LearningRule& rule, double lambda, std::span<const double> p,
            const PopulationState& x, const Vec& xi) {
  if (std::abs(sum(xi)) > 1e-12)
    throw std::invalid_argument("edm_rhs: disturbance must conserve mass");
  Vec dx = mean_field_V(rule, p, x);
  for (std::size_t i = 0; i < dx.size(); ++i)
    dx[i] = lambda * dx[i] + lambda * xi[i];
  return dx;
}

std::vector<std::pair<double, PopulationState>> integrate_edm_frozen(
    const LearningRule& rule, double lambda, const Vec& p_const,
    PopulationState x0, double T, double h, double cadence) {
  const int n = static_cast<int>(p_const.size());
  std::vector<std::pair<double, PopulationState>> out;
  PopulationState x = std::move(x0);
  out.emplace_back(0.0, x);
  double t = 0.0;
  Vec tmp(n);
  const auto step_to = [&](double target) {
    const long steps = static_cast<long>(std::ceil((target - t) / h - 1e-12));
    for (long k = 0; k < steps; ++k) {
      const double tk = t + static_cast<double>(k) * h;
      const double hk = std::min(h, target - tk);
      const Vec k1 = mean_field_V(rule, p_const, x);
      for (int i = 0; i < n; ++i) tmp[i] = x.x[i] + 0.5 * hk * lambda * k1[i];
      const Vec k2 = mean_field_V(rule, p_const, PopulationState{tmp});
      for (int i = 0; i < n; ++i) tmp[i] = x.x[i] + 0.5 * hk * lambda * k2[i];
      const Vec k3 = mean_field_V(rule, p_const, PopulationState{tmp});
      for (int i = 0; i < n; ++i) tmp[i] = x.x[i] + hk * lambda * k3[i];
      const Vec k4 = mean_field_V(rule, p_const, PopulationState{tmp});
      for (int i = 0; i < n; ++i)
        x.x[i] += hk * lambda / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    t = target;
  };
  const long rows = static_cast<long>(std::floor(T / cadence + 1e-9));
  for (long r = 1; r <= rows; ++r) {
    step_to(static_cast<double>(r) * cadence);
    out.emplace_back(t, x);
  }
  if (t < T - 1e-12) {
    step_to(T);
    out.emplace_back(T, x);
  }
  return out;
}

namespace {

struct LoopState {
  GameState q;
  PopulationState x;
};

Vec loop_rhs_x(const TaskDynamics& dyn, const LearningRule& rule, double lambda,
               const DisturbanceModel& dist, double t, const LoopState& s) {
  const Vec xi = dist.eval(t, dyn.n());
  return edm_rhs(rule, lambda, s.q.q, s.x, xi);
}

TrajectoryRow make_row(const TaskDynamics& dyn, const LearningRule& rule,
                       double t, const GameState& q, const PopulationState& x,
                       double lambda, bool* clamp_warned) {
  TrajectoryRow row;
  row.t = t;
  row.q = q.q;
  row.x = x.x;
  row.lambda = lambda;
  GameState qc = q;
  bool clamped = false;
  for (double& v : qc.q) {
    const double c = std::clamp(v, kInteriorMargin, dyn.q_max - kInteriorMargin);
    if (c != v) clamped = true;
    v = c;
  }
  if (clamped && clamp_warned && !*clamp_warned) {
    std::cerr << "warning: game state touched the boundary; storage evaluation "
                 "clamped q into the open interval\n";
    *clamp_warned = true;
  }
  const StorageEvaluation ev = evaluate_storage(dyn, rule, qc, x);
  row.L = ev.L_value;
  row.S = ev.S_value;
  row.gradxS_dot_V = ev.gradx_S_dot_V;
  row.eps_mean = 0.0;
  row.eps_max = 0.0;
  row.q_inf_norm = norm_inf(q.q);
  return row;
}

}  // namespace

TrajectoryRecord run_closed_loop(const TaskDynamics& dyn,
                                 const LearningRule& rule,
                                 const RevisionSchedule& lambda_signal,
                                 const DisturbanceModel& disturbance,
                                 GameState q0, PopulationState x0, double T,
                                 double h, double cadence) {
  if (h <= 0.0) throw std::invalid_argument("run_closed_loop: step must be positive");
  if (T < 0.0) throw std::invalid_argument("run_closed_loop: negative horizon");
  if (cadence <= 0.0)
    throw std::invalid_argument("run_closed_loop: cadence must be positive");
  lambda_signal.validate();
  x0.validate();

  const int n = dyn.n();
  TrajectoryRecord rec;
  rec.n = n;
  LoopState s{std::move(q0), std::move(x0)};
  bool clamp_warned = false;

  const auto step_to = [&](double from, double to) {
    // split at schedule breakpoints so lambda is constant within a step
    double t = from;
    while (t < to - 1e-12) {
      const int seg = lambda_signal.segment_at(t);
      const double lambda = lambda_signal.lam[seg];
      double stop = to;
      if (seg + 1 < static_cast<int>(lambda_signal.t.size()))
        stop = std::min(stop, lambda_signal.t[seg + 1]);
      const long steps = static_cast<long>(std::ceil((stop - t) / h - 1e-12));
      for (long k = 0; k < steps; ++k) {
        const double tk = t + static_cast<double>(k) * h;
        const double hk = std::min(h, stop - tk);
        const LoopState& y0 = s;
        const Vec kq1 = game_rhs(dyn, y0.q, y0.x);
        const Vec kx1 = loop_rhs_x(dyn, rule, lambda, disturbance, tk, y0);
        LoopState y1 = s;
        for (int i = 0; i < n; ++i) {
          y1.q.q[i] += 0.5 * hk * kq1[i];
          y1.x.x[i] += 0.5 * hk * kx1[i];
        }
        const Vec kq2 = game_rhs(dyn, y1.q, y1.x);
        const Vec kx2 = loop_rhs_x(dyn, rule, lambda, disturbance, tk + 0.5 * hk, y1);
        LoopState y2 = s;
        for (int i = 0; i < n; ++i) {
          y2.q.q[i] += 0.5 * hk * kq2[i];
          y2.x.x[i] += 0.5 * hk * kx2[i];
        }
        const Vec kq3 = game_rhs(dyn, y2.q, y2.x);
        const Vec kx3 = loop_rhs_x(dyn, rule, lambda, disturbance, tk + 0.5 * hk, y2);
        LoopState y3 = s;
        for (int i = 0; i < n; ++i) {
          y3.q.q[i] += hk * kq3[i];
          y3.x.x[i] += hk * kx3[i];
        }
        const Vec kq4 = game_rhs(dyn, y3.q, y3.x);
        const Vec kx4 = loop_rhs_x(dyn, rule, lambda, disturbance, tk + hk, y3);
        double mass = 0.0;
        for (int i = 0; i < n; ++i) {
          s.q.q[i] += hk / 6.0 * (kq1[i] + 2.0 * kq2[i] + 2.0 * kq3[i] + kq4[i]);
          s.q.q[i] = std::clamp(s.q.q[i], 0.0, dyn.q_max);
          s.x.x[i] += hk / 6.0 * (kx1[i] + 2.0 * kx2[i] + 2.0 * kx3[i] + kx4[i]);
          if (s.x.x[i] < 0.0) s.x.x[i] = 0.0;
          mass += s.x.x[i];
        }
        for (int i = 0; i < n; ++i) s.x.x[i] /= mass;
      }
      t = stop;
    }
  };

  rec.rows.push_back(make_row(dyn, rule, 0.0, s.q, s.x,
                              lambda_signal.rate_at(0.0), &clamp_warned));
  const long rows = static_cast<long>(std::floor(T / cadence + 1e-9));
  double t = 0.0;
  for (long r = 1; r <= rows; ++r) {
    const double target = static_cast<double>(r) * cadence;
    step_to(t, target);
    t = target;
    rec.rows.push_back(make_row(dyn, rule, t, s.q, s.x,
                                lambda_signal.rate_at(t), &clamp_warned));
  }
  if (t < T - 1e-12) {
    step_to(t, T);
    rec.rows.push_back(make_row(dyn, rule, T, s.q, s.x,
                                lambda_signal.rate_at(T), &clamp_warned));
  }
  return rec;
}

Vec xi_bound(const LearningRule& rule, const PopulationState& x,
             const Vec& eps_by_class) {
  if (x.x.size() != eps_by_class.size())
    throw std::invalid_argument("xi_bound: size mismatch");
  double b = 0.0;
  for (std::size_t j = 0; j < x.x.size(); ++j) {
    if (eps_by_class[j] < 0.0)
      throw std::invalid_argument("xi_bound: negative estimation error");
    b += x.x[j] * eps_by_class[j];
  }
  return Vec(x.x.size(), rule.lipschitz_c * b);
}

}  // namespace taskgame
