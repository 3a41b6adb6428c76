#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "taskgame/vec.hpp"

namespace taskgame {

// One sampled output row. Column order is part of the file format and must
// not change: t, q_1..q_n, x_1..x_n, lambda, L, S, gradxS_dot_V, eps_mean,
// eps_max, q_inf_norm.
struct TrajectoryRow {
  double t = 0.0;
  Vec q;
  Vec x;
  double lambda = 0.0;
  double L = 0.0;
  double S = 0.0;
  double gradxS_dot_V = 0.0;
  double eps_mean = 0.0;
  double eps_max = 0.0;
  double q_inf_norm = 0.0;
};

struct TrajectoryRecord {
  int n = 0;
  std::vector<TrajectoryRow> rows;
};

// Shortest round-trip decimal form (std::to_chars); reparsing gives back the
// identical double, and identical runs produce byte-identical files.
std::string format_double(double v);

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& os);

}  // namespace taskgame
