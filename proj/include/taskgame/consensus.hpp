#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "taskgame/game.hpp"
#include "taskgame/vec.hpp"

namespace taskgame {

// Static undirected communication graph in CSR form.
struct CommGraph {
  int n_agents = 0;
  std::vector<int> offsets;    // size n_agents + 1
  std::vector<int> neighbors;  // flat adjacency, sorted per agent
  std::uint64_t seed = 0;      // seed that produced the accepted (connected) draw

  int degree(int k) const { return offsets[k + 1] - offsets[k]; }
  std::span<const int> neighbors_of(int k) const {
    return {neighbors.data() + offsets[k],
            static_cast<std::size_t>(degree(k))};
  }
  long edge_count() const { return static_cast<long>(neighbors.size()) / 2; }
  bool connected() const;

  // Build from an explicit undirected edge list (used by tests and loaders).
  static CommGraph from_edges(int n_agents,
                              const std::vector<std::pair<int, int>>& edges);
};

// Per-agent payoff estimates plus leader flags; row k is agent k's estimate
// of the full game state.
struct EstimateBank {
  int n_agents = 0;
  int n_tasks = 0;
  Vec estimates;                 // n_agents * n_tasks, row-major
  std::vector<std::uint8_t> leader;

  static EstimateBank zeros(int n_agents, int n_tasks,
                            std::vector<std::uint8_t> leader);

  std::span<double> row(int k) {
    return {estimates.data() + static_cast<std::size_t>(k) * n_tasks,
            static_cast<std::size_t>(n_tasks)};
  }
  std::span<const double> row(int k) const {
    return {estimates.data() + static_cast<std::size_t>(k) * n_tasks,
            static_cast<std::size_t>(n_tasks)};
  }
};

// Erdos-Renyi G(n, p) resampled (sub-seed incremented) until connected;
// throws std::runtime_error after 1000 attempts.
CommGraph generate_graph(int n_agents, double p_edge, std::uint64_t seed);

// Exactly max(1, round(fraction * n_agents)) leaders, uniform without
// replacement. fraction in (0, 1].
std::vector<std::uint8_t> select_leaders(const CommGraph& graph, double fraction,
                                         std::uint64_t seed);

// One synchronous estimation round: leaders copy q_true, followers average
// their neighbors' pre-round estimates (optionally including their own).
// All reads come from src; dst may not alias src.
void consensus_round_into(const EstimateBank& src, const CommGraph& graph,
                          const GameState& q_true, EstimateBank& dst,
                          bool include_self = false);

EstimateBank consensus_round(const EstimateBank& bank, const CommGraph& graph,
                             const GameState& q_true, bool include_self = false);

struct EstimationErrors {
  Vec per_agent;  // eps_k = ||q_hat_k - q||_2
  double mean = 0.0;
  double max = 0.0;
};

EstimationErrors estimation_errors(const EstimateBank& bank,
                                   const GameState& q_true);

}  // namespace taskgame
