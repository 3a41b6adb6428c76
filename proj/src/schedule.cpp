#include "taskgame/schedule.hpp"

#include <algorithm>
#include <stdexcept>

namespace taskgame {

RevisionSchedule RevisionSchedule::constant(double lambda) {
  RevisionSchedule s;
  s.t = {0.0};
  s.lam = {lambda};
  s.validate();
  return s;
}

void RevisionSchedule::validate() const {
  if (t.empty() || t.size() != lam.size())
    throw std::invalid_argument("RevisionSchedule: breakpoint/rate size mismatch");
  for (std::size_t m = 0; m < t.size(); ++m) {
    if (lam[m] <= 0.0)
      throw std::invalid_argument("RevisionSchedule: rates must be positive");
    if (m > 0 && !(t[m] > t[m - 1]))
      throw std::invalid_argument("RevisionSchedule: breakpoints must increase");
  }
}

int RevisionSchedule::segment_at(double time) const {
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const auto idx = static_cast<int>(it - t.begin()) - 1;
  return std::max(0, idx);
}

double RevisionSchedule::rate_at(double time) const {
  return lam[segment_at(time)];
}

}  // namespace taskgame
