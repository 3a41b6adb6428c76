#pragma once

#include <vector>

#include "taskgame/vec.hpp"

namespace taskgame {

// Piecewise-constant revision rate: lambda(t) = lam[m] on [t[m], t[m+1]),
// right-continuous, with the last rate extended to +infinity.
struct RevisionSchedule {
  std::vector<double> t;    // strictly increasing breakpoints
  std::vector<double> lam;  // positive rates, same length

  static RevisionSchedule constant(double lambda);
  void validate() const;  // throws std::invalid_argument

  double rate_at(double time) const;
  // Index of the segment containing `time` (clamped to the ends).
  int segment_at(double time) const;
};

}  // namespace taskgame
