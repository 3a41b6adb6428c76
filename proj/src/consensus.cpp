#include "taskgame/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "taskgame/rng.hpp"

namespace taskgame {

bool CommGraph::connected() const {
  if (n_agents == 0) return false;
  std::vector<std::uint8_t> seen(n_agents, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int visited = 1;
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    for (int nb : neighbors_of(k)) {
      if (!seen[nb]) {
        seen[nb] = 1;
        ++visited;
        stack.push_back(nb);
      }
    }
  }
  return visited == n_agents;
}

CommGraph CommGraph::from_edges(int n_agents,
                                const std::vector<std::pair<int, int>>& edges) {
  CommGraph g;
  g.n_agents = n_agents;
  std::vector<int> deg(n_agents, 0);
  for (auto [a, b] : edges) {
    if (a == b || a < 0 || b < 0 || a >= n_agents || b >= n_agents)
      throw std::invalid_argument("CommGraph: bad edge");
    ++deg[a];
    ++deg[b];
  }
  g.offsets.assign(n_agents + 1, 0);
  std::partial_sum(deg.begin(), deg.end(), g.offsets.begin() + 1);
  g.neighbors.resize(g.offsets.back());
  std::vector<int> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (auto [a, b] : edges) {
    g.neighbors[fill[a]++] = b;
    g.neighbors[fill[b]++] = a;
  }
  for (int k = 0; k < n_agents; ++k)
    std::sort(g.neighbors.begin() + g.offsets[k],
              g.neighbors.begin() + g.offsets[k + 1]);
  return g;
}

CommGraph generate_graph(int n_agents, double p_edge, std::uint64_t seed) {
  if (n_agents < 2) throw std::invalid_argument("generate_graph: need >= 2 agents");
  if (!(p_edge > 0.0 && p_edge <= 1.0))
    throw std::invalid_argument("generate_graph: p_edge must be in (0, 1]");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::uint64_t sub_seed = seed + static_cast<std::uint64_t>(attempt);
    Rng rng(sub_seed);
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(
        p_edge * 0.5 * n_agents * (n_agents - 1) * 1.1) + 16);
    for (int a = 0; a < n_agents; ++a)
      for (int b = a + 1; b < n_agents; ++b)
        if (rng.bernoulli(p_edge)) edges.emplace_back(a, b);
    CommGraph g = CommGraph::from_edges(n_agents, edges);
    g.seed = sub_seed;
    if (g.connected()) return g;
  }
  throw std::runtime_error(
      "generate_graph: no connected draw in 1000 attempts (p_edge too small)");
}

std::vector<std::uint8_t> select_leaders(const CommGraph& graph, double fraction,
                                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("select_leaders: fraction must be in (0, 1]");
  const int n = graph.n_agents;
  const int count = std::max(1, static_cast<int>(std::llround(fraction * n)));
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(seed);
  // partial Fisher-Yates: first `count` slots become the leader set
  for (int k = 0; k < count; ++k) {
    const int j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - k)));
    std::swap(ids[k], ids[j]);
  }
  std::vector<std::uint8_t> flags(n, 0);
  for (int k = 0; k < count; ++k) flags[ids[k]] = 1;
  return flags;
}

EstimateBank EstimateBank::zeros(int n_agents, int n_tasks,
                                 std::vector<std::uint8_t> leader) {
  EstimateBank b;
  b.n_agents = n_agents;
  b.n_tasks = n_tasks;
  b.estimates.assign(static_cast<std::size_t>(n_agents) * n_tasks, 0.0);
  b.leader = std::move(leader);
  return b;
}

void consensus_round_into(const EstimateBank& src, const CommGraph& graph,
                          const GameState& q_true, EstimateBank& dst,
                          bool include_self) {
  const int n = src.n_agents;
  const int m = src.n_tasks;
  for (int k = 0; k < n; ++k) {
    auto out = dst.row(k);
    if (src.leader[k]) {
      for (int c = 0; c < m; ++c) out[c] = q_true.q[c];
      continue;
    }
    const auto nbrs = graph.neighbors_of(k);
    if (nbrs.empty()) {  // cannot happen on a connected graph; keep prior
      const auto prev = src.row(k);
      std::copy(prev.begin(), prev.end(), out.begin());
      continue;
    }
    double acc[8];
    Vec acc_big;
    double* a = m <= 8 ? acc : (acc_big.assign(m, 0.0), acc_big.data());
    for (int c = 0; c < m; ++c) a[c] = 0.0;
    for (int nb : nbrs) {
      const double* r = src.estimates.data() + static_cast<std::size_t>(nb) * m;
      for (int c = 0; c < m; ++c) a[c] += r[c];
    }
    double denom = static_cast<double>(nbrs.size());
    if (include_self) {
      const auto self = src.row(k);
      for (int c = 0; c < m; ++c) a[c] += self[c];
      denom += 1.0;
    }
    for (int c = 0; c < m; ++c) out[c] = a[c] / denom;
  }
}

EstimateBank consensus_round(const EstimateBank& bank, const CommGraph& graph,
                             const GameState& q_true, bool include_self) {
  EstimateBank next = bank;
  consensus_round_into(bank, graph, q_true, next, include_self);
  return next;
}

EstimationErrors estimation_errors(const EstimateBank& bank,
                                   const GameState& q_true) {
  EstimationErrors e;
  e.per_agent.resize(bank.n_agents);
  double total = 0.0;
  for (int k = 0; k < bank.n_agents; ++k) {
    const auto r = bank.row(k);
    double s = 0.0;
    for (int c = 0; c < bank.n_tasks; ++c) {
      const double d = r[c] - q_true.q[c];
      s += d * d;
    }
    const double eps = std::sqrt(s);
    e.per_agent[k] = eps;
    total += eps;
    e.max = std::max(e.max, eps);
  }
  e.mean = bank.n_agents > 0 ? total / bank.n_agents : 0.0;
  return e;
}

}  // namespace taskgame
