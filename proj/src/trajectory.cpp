#include "taskgame/trajectory.hpp"

#include <charconv>
#include <ostream>

namespace taskgame {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& os) {
  os << "t";
  for (int i = 1; i <= rec.n; ++i) os << ",q_" << i;
  for (int i = 1; i <= rec.n; ++i) os << ",x_" << i;
  os << ",lambda,L,S,gradxS_dot_V,eps_mean,eps_max,q_inf_norm\n";
  for (const auto& r : rec.rows) {
    os << format_double(r.t);
    for (double v : r.q) os << ',' << format_double(v);
    for (double v : r.x) os << ',' << format_double(v);
    os << ',' << format_double(r.lambda) << ',' << format_double(r.L) << ','
       << format_double(r.S) << ',' << format_double(r.gradxS_dot_V) << ','
       << format_double(r.eps_mean) << ',' << format_double(r.eps_max) << ','
       << format_double(r.q_inf_norm) << '\n';
  }
}

}  // namespace taskgame
