#include "taskgame/finite_sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "taskgame/meanfield.hpp"
#include "taskgame/passivity.hpp"

namespace taskgame {

PopulationState SimulationState::empirical_x() const {
  const double n = static_cast<double>(agents.size());
  Vec x(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    x[i] = static_cast<double>(counts[i]) / n;
  return PopulationState{std::move(x)};
}

double next_ring_time(const RevisionSchedule& schedule, double t_now,
                      double exp1_draw) {
  int seg = schedule.segment_at(t_now);
  double t = t_now;
  double remaining = exp1_draw;
  const int last = static_cast<int>(schedule.t.size()) - 1;
  while (seg < last) {
    const double seg_end = schedule.t[seg + 1];
    const double capacity = schedule.lam[seg] * (seg_end - t);
    if (remaining <= capacity) return t + remaining / schedule.lam[seg];
    remaining -= capacity;
    t = seg_end;
    ++seg;
  }
  return t + remaining / schedule.lam[last];
}

double sample_next_ring(const RevisionSchedule& schedule, double t_now,
                        Rng& rng) {
  return next_ring_time(schedule, t_now, rng.exponential());
}

int revise_agent(AgentRecord& agent, const LearningRule& rule,
                 std::span<const double> p_hat, Rng& rng,
                 std::vector<long>& counts, long* substoch_events) {
  const int n = static_cast<int>(p_hat.size());
  const int j = agent.strategy;
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    if (i != j) total += rho(rule, p_hat, j, i);
  double u = rng.uniform();
  if (total > 1.0) {
    // conditioned on switching; the paper's gain choice is meant to keep
    // total <= 1, but transients can exceed it
    if (substoch_events) ++(*substoch_events);
    u *= total;
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == j) continue;
    acc += rho(rule, p_hat, j, i);
    if (u < acc) {
      --counts[j];
      ++counts[i];
      agent.strategy = i;
      return i;
    }
  }
  return j;
}

namespace {

// Per-class averages of rho(p_hat) and of the estimation error; the effective
// estimate is the same one a ring at this instant would use.
struct ClassAverages {
  std::vector<double> avg_rho;  // n*n, row j col i
  Vec avg_eps;                  // per class
  Vec x;                        // empirical fractions
};

std::span<const double> effective_estimate(const SimulationState& s, int k,
                                           bool leaders_continuous) {
  if (leaders_continuous && s.agents[k].leader)
    return {s.q.q.data(), s.q.q.size()};
  return s.bank.row(k);
}

ClassAverages class_averages(const SimulationState& s, const LearningRule& rule,
                             bool leaders_continuous) {
  const int n = static_cast<int>(s.counts.size());
  const long N = static_cast<long>(s.agents.size());
  ClassAverages ca;
  ca.avg_rho.assign(static_cast<std::size_t>(n) * n, 0.0);
  ca.avg_eps.assign(n, 0.0);
  ca.x.resize(n);
  for (long k = 0; k < N; ++k) {
    const auto p_hat = effective_estimate(s, static_cast<int>(k), leaders_continuous);
    const int j = s.agents[k].strategy;
    for (int i = 0; i < n; ++i)
      if (i != j)
        ca.avg_rho[static_cast<std::size_t>(j) * n + i] += rho(rule, p_hat, j, i);
    double e = 0.0;
    for (int c = 0; c < n; ++c) {
      const double d = p_hat[c] - s.q.q[c];
      e += d * d;
    }
    ca.avg_eps[j] += std::sqrt(e);
  }
  for (int j = 0; j < n; ++j) {
    ca.x[j] = static_cast<double>(s.counts[j]) / static_cast<double>(N);
    if (s.counts[j] > 0) {
      const double inv = 1.0 / static_cast<double>(s.counts[j]);
      ca.avg_eps[j] *= inv;
      for (int i = 0; i < n; ++i)
        ca.avg_rho[static_cast<std::size_t>(j) * n + i] *= inv;
    }
  }
  return ca;
}

Vec measure_xi_impl(const SimulationState& s, const LearningRule& rule,
                    const ClassAverages& ca) {
  const int n = static_cast<int>(s.counts.size());
  Vec xi(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double inflow = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i || s.counts[j] == 0) continue;
      inflow += ca.x[j] * (ca.avg_rho[static_cast<std::size_t>(j) * n + i] -
                           rho(rule, s.q.q, j, i));
    }
    double outflow = 0.0;
    if (s.counts[i] > 0) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        outflow += ca.avg_rho[static_cast<std::size_t>(i) * n + j] -
                   rho(rule, s.q.q, i, j);
      }
    }
    xi[i] = inflow - ca.x[i] * outflow;
  }
  return xi;
}

}  // namespace

Vec measure_xi(const SimulationState& state, const LearningRule& rule) {
  if (state.agents.empty()) throw std::invalid_argument("measure_xi: empty population");
  return measure_xi_impl(state, rule, class_averages(state, rule, false));
}

namespace {

std::vector<long> counts_from_fractions(const Vec& x0, int N) {
  const int n = static_cast<int>(x0.size());
  std::vector<long> counts(n);
  std::vector<std::pair<double, int>> rem(n);
  long assigned = 0;
  for (int i = 0; i < n; ++i) {
    const double exact = x0[i] * N;
    counts[i] = static_cast<long>(std::floor(exact + 1e-9));
    assigned += counts[i];
    rem[i] = {exact - static_cast<double>(counts[i]), i};
  }
  // hand the leftover agents to the largest remainders (index as tie-break)
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (long k = 0; k < N - assigned; ++k) ++counts[rem[static_cast<std::size_t>(k) % n].second];
  return counts;
}

}  // namespace

FiniteRunResult run_finite(const FiniteSimConfig& cfg, std::uint64_t seed) {
  cfg.dyn.validate();
  if (cfg.n_agents < 2) throw std::invalid_argument("run_finite: need >= 2 agents");
  if (cfg.horizon < 0.0) throw std::invalid_argument("run_finite: negative horizon");
  if (cfg.step <= 0.0 || cfg.cadence <= 0.0)
    throw std::invalid_argument("run_finite: step and cadence must be positive");
  if (static_cast<int>(cfg.q0.size()) != cfg.dyn.n() ||
      static_cast<int>(cfg.x0.size()) != cfg.dyn.n())
    throw std::invalid_argument("run_finite: initial state size mismatch");
  if (!cfg.controller && cfg.lambda <= 0.0)
    throw std::invalid_argument("run_finite: lambda must be positive");
  if (cfg.controller) cfg.controller->validate();

  const int n = cfg.dyn.n();
  const int N = cfg.n_agents;

  FiniteRunResult res;
  res.xi_worst_slack = std::numeric_limits<double>::infinity();

  CommGraph graph = generate_graph(N, cfg.p_edge, seed);
  res.graph_seed_used = graph.seed;
  std::vector<std::uint8_t> leaders = select_leaders(graph, cfg.leader_fraction, seed + 1);
  Rng rng(seed + 2);

  SimulationState s;
  s.t = 0.0;
  s.q = GameState{cfg.q0};
  s.counts = counts_from_fractions(cfg.x0, N);
  s.bank = EstimateBank::zeros(N, n, leaders);
  if (cfg.estimates_start_true)
    for (int k = 0; k < N; ++k) {
      auto r = s.bank.row(k);
      std::copy(cfg.q0.begin(), cfg.q0.end(), r.begin());
    }
  EstimateBank scratch = s.bank;

  ControllerState ctrl;
  double lambda_now = cfg.lambda;
  if (cfg.controller) {
    ctrl = ControllerState::initial(*cfg.controller);
    lambda_now = ctrl.lambda_m;
  }
  s.schedule.t = {0.0};
  s.schedule.lam = {lambda_now};
  res.epochs.push_back({0, 0.0, lambda_now, 0.0});

  // agents: block assignment by strategy, then initial clock draws in id order
  s.agents.resize(N);
  {
    int id = 0;
    for (int i = 0; i < n; ++i)
      for (long c = 0; c < s.counts[i]; ++c) s.agents[id++].strategy = i;
    assert(id == N);
  }
  for (int k = 0; k < N; ++k) {
    s.agents[k].leader = leaders[k] != 0;
    s.agents[k].next_ring = rng.exponential() / lambda_now;
  }

  using Event = std::pair<double, int>;  // (ring time, agent)
  std::priority_queue<Event, std::vector<Event>, std::greater<>> heap;
  for (int k = 0; k < N; ++k) heap.emplace(s.agents[k].next_ring, k);

  std::vector<std::uint8_t> rang_this_epoch(N, 0);
  long ringers_this_epoch = 0;
  const auto close_epoch = [&]() {
    res.epochs.back().ring_fraction =
        static_cast<double>(ringers_this_epoch) / static_cast<double>(N);
    std::fill(rang_this_epoch.begin(), rang_this_epoch.end(), 0);
    ringers_this_epoch = 0;
  };

  res.traj.n = n;
  const auto record_row = [&]() {
    TrajectoryRow row;
    row.t = s.t;
    row.q = s.q.q;
    const PopulationState x = s.empirical_x();
    row.x = x.x;
    row.lambda = lambda_now;
    GameState qc = s.q;
    for (double& v : qc.q)
      v = std::clamp(v, kInteriorMargin, cfg.dyn.q_max - kInteriorMargin);
    const StorageEvaluation ev = evaluate_storage(cfg.dyn, cfg.rule, qc, x);
    row.L = ev.L_value;
    row.S = ev.S_value;
    row.gradxS_dot_V = ev.gradx_S_dot_V;
    const EstimationErrors ee = estimation_errors(s.bank, s.q);
    row.eps_mean = ee.mean;
    row.eps_max = ee.max;
    row.q_inf_norm = norm_inf(s.q.q);
    if (cfg.check_xi_bound) {
      const ClassAverages ca =
          class_averages(s, cfg.rule, cfg.leaders_observe_continuously);
      const Vec xi = measure_xi_impl(s, cfg.rule, ca);
      const Vec bound = xi_bound(cfg.rule, x, ca.avg_eps);
      const double slack = bound[0] - norm_inf(xi);
      ++res.xi_checks;
      res.xi_worst_slack = std::min(res.xi_worst_slack, slack);
      if (slack < -1e-12) ++res.xi_violations;
    }
    res.traj.rows.push_back(std::move(row));
  };

  // RK4 with the empirical x frozen, preallocated scratch (hot path: runs
  // between every pair of events)
  Vec xq(n), k1(n), k2(n), k3(n), k4(n), qt(n);
  const auto rhs_into = [&](const Vec& qv, Vec& out) {
    for (int i = 0; i < n; ++i) {
      const double v =
          cfg.dyn.w[i] - rate_F(cfg.dyn, i, std::max(0.0, qv[i]), xq[i]);
      out[i] = (qv[i] >= cfg.dyn.q_max) ? std::min(0.0, v) : v;
    }
  };
  const auto advance_q = [&](double to) {
    if (to <= s.t) return;
    for (int i = 0; i < n; ++i)
      xq[i] = static_cast<double>(s.counts[i]) / static_cast<double>(N);
    const double t0 = s.t;
    const double h = cfg.step;
    const long steps = static_cast<long>(std::ceil((to - t0) / h - 1e-12));
    for (long k = 0; k < steps; ++k) {
      const double tk = t0 + static_cast<double>(k) * h;
      const double hk = std::min(h, to - tk);
      rhs_into(s.q.q, k1);
      for (int i = 0; i < n; ++i) qt[i] = s.q.q[i] + 0.5 * hk * k1[i];
      rhs_into(qt, k2);
      for (int i = 0; i < n; ++i) qt[i] = s.q.q[i] + 0.5 * hk * k2[i];
      rhs_into(qt, k3);
      for (int i = 0; i < n; ++i) qt[i] = s.q.q[i] + hk * k3[i];
      rhs_into(qt, k4);
      for (int i = 0; i < n; ++i) {
        s.q.q[i] += hk / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        s.q.q[i] = std::clamp(s.q.q[i], 0.0, cfg.dyn.q_max);
      }
    }
    s.t = to;
  };

  record_row();
  long next_row = 1;
  double next_comm = 1.0;
  const double T = cfg.horizon;
  const double inf = std::numeric_limits<double>::infinity();

  while (s.t < T) {
    const double t_row = next_row * cfg.cadence;
    const double t_ring = heap.empty() ? inf : heap.top().first;
    const double t_next = std::min({next_comm, t_row, t_ring, T});
    advance_q(t_next);

    if (t_next == next_comm && t_next <= T) {
      consensus_round_into(s.bank, graph, s.q, scratch, cfg.consensus_include_self);
      std::swap(s.bank, scratch);
      if (cfg.controller) {
        const PopulationState x = s.empirical_x();
        std::span<const double> p_trig{s.q.q.data(), s.q.q.size()};
        if (cfg.trigger_uses_leader_estimate) {
          // first leader by id acts as the designated evaluator
          for (int k = 0; k < N; ++k)
            if (s.agents[k].leader) {
              p_trig = s.bank.row(k);
              break;
            }
        }
        const bool trig =
            evaluate_trigger(cfg.rule, p_trig, x, cfg.controller->epsilon);
        const ControllerUpdate up = maybe_update(ctrl, *cfg.controller, s.t, trig);
        if (up.broadcast) {
          close_epoch();
          ctrl = up.state;
          lambda_now = ctrl.lambda_m;
          s.schedule.t.push_back(s.t);
          s.schedule.lam.push_back(lambda_now);
          res.epochs.push_back({ctrl.m, ctrl.t_m, lambda_now, 0.0});
          // memoryless clocks: every outstanding ring is resampled under the
          // broadcast rate, in agent order
          while (!heap.empty()) heap.pop();
          for (int k = 0; k < N; ++k) {
            s.agents[k].next_ring = s.t + rng.exponential() / lambda_now;
            heap.emplace(s.agents[k].next_ring, k);
          }
        }
      }
      next_comm += 1.0;
    }
    if (t_next == t_row && t_next <= T) {
      record_row();
      ++next_row;
    }
    while (!heap.empty() && heap.top().first == t_next && t_next < T) {
      const auto [tr, k] = heap.top();
      heap.pop();
      if (s.agents[k].next_ring != tr) continue;  // superseded by a broadcast
      ++res.ring_count;
      if (!rang_this_epoch[k]) {
        rang_this_epoch[k] = 1;
        ++ringers_this_epoch;
      }
      const double nr = s.t + rng.exponential() / lambda_now;
      s.agents[k].next_ring = nr;
      heap.emplace(nr, k);
      const auto p_hat = effective_estimate(s, k, cfg.leaders_observe_continuously);
      revise_agent(s.agents[k], cfg.rule, p_hat, rng, s.counts,
                   &res.substoch_events);
    }
    if (s.t >= T) break;
  }

  advance_q(T);
  if (res.traj.rows.empty() || res.traj.rows.back().t < T - 1e-12) record_row();
  close_epoch();

  assert(std::accumulate(s.counts.begin(), s.counts.end(), 0L) == N);
  res.final_state = std::move(s);
  return res;
}

}  // namespace taskgame
