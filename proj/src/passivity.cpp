#include "taskgame/passivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "taskgame/rng.hpp"

namespace taskgame {

namespace {

void require_interior(const TaskDynamics& dyn, const GameState& q) {
  for (double qi : q.q)
    if (!(qi > 0.0 && qi < dyn.q_max))
      throw std::domain_error("storage_L: q must lie in the open interval (0, q_max)");
}

// x*(q) for the shipped family, in closed form.
double x_star_closed(const TaskDynamics& dyn, int i, double q_i) {
  const double th = std::tanh(0.5 * dyn.alpha[i] * q_i);
  return std::pow(dyn.w[i] / (dyn.R[i] * th), 1.0 / dyn.beta[i]);
}

}  // namespace

double storage_L(const TaskDynamics& dyn, const GameState& q,
                 const PopulationState& x) {
  require_interior(dyn, q);
  double total = 0.0;
  for (int i = 0; i < dyn.n(); ++i) {
    const double th = std::tanh(0.5 * dyn.alpha[i] * q.q[i]);
    const double xs = x_star_closed(dyn, i, q.q[i]);
    const double bp1 = dyn.beta[i] + 1.0;
    total += dyn.R[i] * th * (std::pow(x.x[i], bp1) - std::pow(xs, bp1)) / bp1 -
             dyn.w[i] * (x.x[i] - xs);
  }
  return total;
}

double storage_L_quadrature(const TaskDynamics& dyn, const GameState& q,
                            const PopulationState& x) {
  require_interior(dyn, q);
  constexpr int kPanels = 64;
  double total = 0.0;
  for (int i = 0; i < dyn.n(); ++i) {
    const double xs = x_star_of_q(dyn, i, q.q[i]);
    const double a = xs, b = x.x[i];
    const double h = (b - a) / (2 * kPanels);
    double acc = rate_F(dyn, i, q.q[i], std::max(0.0, a)) +
                 rate_F(dyn, i, q.q[i], std::max(0.0, b)) - 2.0 * dyn.w[i];
    for (int k = 1; k < 2 * kPanels; ++k) {
      const double s = a + h * k;
      const double f = rate_F(dyn, i, q.q[i], std::max(0.0, s)) - dyn.w[i];
      acc += (k % 2 == 1 ? 4.0 : 2.0) * f;
    }
    total += acc * h / 3.0;
  }
  return total;
}

Vec grad_q_L(const TaskDynamics& dyn, const GameState& q,
             const PopulationState& x) {
  require_interior(dyn, q);
  Vec g(dyn.n());
  for (int i = 0; i < dyn.n(); ++i) {
    const double th = std::tanh(0.5 * dyn.alpha[i] * q.q[i]);
    const double dth = 0.5 * dyn.alpha[i] * (1.0 - th * th);
    const double xs = x_star_closed(dyn, i, q.q[i]);
    const double bp1 = dyn.beta[i] + 1.0;
    g[i] = dyn.R[i] * dth * (std::pow(x.x[i], bp1) - std::pow(xs, bp1)) / bp1;
  }
  return g;
}

Vec grad_x_L(const TaskDynamics& dyn, const GameState& q,
             const PopulationState& x) {
  Vec g(dyn.n());
  for (int i = 0; i < dyn.n(); ++i)
    g[i] = rate_F(dyn, i, q.q[i], x.x[i]) - dyn.w[i];
  return g;
}

double storage_S(const LearningRule& rule, std::span<const double> p,
                 const PopulationState& x) {
  if (rule.kind != LearningRule::Kind::smith)
    throw std::invalid_argument("storage_S: only the Smith rule is supported");
  const int n = static_cast<int>(p.size());
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    double row = 0.0;
    for (int i = 0; i < n; ++i) {
      const double gap = std::max(0.0, p[i] - p[j]);
      row += gap * gap;
    }
    s += x.x[j] * row;
  }
  return 0.5 * rule.varrho * s;
}

std::pair<Vec, Vec> grad_S(const LearningRule& rule, std::span<const double> p,
                           const PopulationState& x) {
  if (rule.kind != LearningRule::Kind::smith)
    throw std::invalid_argument("grad_S: only the Smith rule is supported");
  const int n = static_cast<int>(p.size());
  Vec gp(n, 0.0), gx(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double inflow = 0.0, outflow = 0.0, sq = 0.0;
    for (int j = 0; j < n; ++j) {
      inflow += x.x[j] * std::max(0.0, p[i] - p[j]);
      outflow += std::max(0.0, p[j] - p[i]);
      const double gap = std::max(0.0, p[j] - p[i]);
      sq += gap * gap;
    }
    gp[i] = rule.varrho * (inflow - x.x[i] * outflow);
    gx[i] = 0.5 * rule.varrho * sq;
  }
  return {std::move(gp), std::move(gx)};
}

StorageEvaluation evaluate_storage(const TaskDynamics& dyn,
                                   const LearningRule& rule, const GameState& q,
                                   const PopulationState& x) {
  StorageEvaluation ev;
  ev.L_value = storage_L(dyn, q, x);
  ev.S_value = storage_S(rule, q.q, x);
  const Vec gq = grad_q_L(dyn, q, x);
  const Vec gxL = grad_x_L(dyn, q, x);  // = F - w, so qdot = -gxL off the cap
  ev.gradq_L_dot_qdot = 0.0;
  for (int i = 0; i < dyn.n(); ++i) ev.gradq_L_dot_qdot -= gq[i] * gxL[i];
  const auto [gp, gx] = grad_S(rule, q.q, x);
  const Vec v = mean_field_V(rule, q.q, x);
  ev.gradx_S_dot_V = 0.0;
  for (int i = 0; i < dyn.n(); ++i) ev.gradx_S_dot_V += gx[i] * v[i];
  return ev;
}

bool PassivityReport::all_pass() const {
  return grad_identity_L.pass() && sign_L.pass() && grad_identity_S.pass() &&
         sign_S.pass() && zero_set_L.pass() && zero_set_S.pass();
}

std::string PassivityReport::to_text() const {
  std::ostringstream os;
  os << "passivity report\n";
  for (const CheckResult* c : {&grad_identity_L, &sign_L, &grad_identity_S,
                               &sign_S, &zero_set_L, &zero_set_S}) {
    os << "  " << (c->pass() ? "PASS" : "FAIL") << "  " << c->name << "  samples="
       << c->samples << " violations=" << c->violations << " worst=" << c->worst
       << "\n";
  }
  return os.str();
}

std::string PassivityReport::to_csv() const {
  std::ostringstream os;
  os << "check,samples,violations,worst,pass\n";
  for (const CheckResult* c : {&grad_identity_L, &sign_L, &grad_identity_S,
                               &sign_S, &zero_set_L, &zero_set_S}) {
    os << c->name << ',' << c->samples << ',' << c->violations << ',' << c->worst
       << ',' << (c->pass() ? 1 : 0) << "\n";
  }
  return os.str();
}

PassivityReport verify_passivity(const TaskDynamics& dyn,
                                 const LearningRule& rule, int samples,
                                 std::uint64_t seed) {
  PassivityReport rep;
  rep.grad_identity_L.name = "grad_x L equals F - w (rel 1e-6)";
  rep.sign_L.name = "grad_q L . qdot <= 0 (slack 1e-10)";
  rep.grad_identity_S.name = "grad_p S equals V (abs 1e-12)";
  rep.sign_S.name = "grad_x S . V <= 0 (slack 1e-10)";
  rep.zero_set_L.name = "zero set L <-> F = w";
  rep.zero_set_S.name = "zero set S <-> V = 0";

  const int n = dyn.n();
  Rng rng(seed);

  // Near-equilibrium states are injected so the zero-set checks fire on more
  // than the random bulk. Equilibria may not exist for adversarial dyn; then
  // only random states are checked.
  std::vector<std::pair<GameState, PopulationState>> states;
  states.reserve(samples + 8);
  try {
    const Equilibrium eq = solve_equilibrium(dyn);
    states.push_back({GameState{eq.q_star}, eq.x_star});
    for (double d : {1e-3, 1e-5, 1e-7}) {
      PopulationState x = eq.x_star;
      x.x[0] += d;
      x.x[1] -= d;
      states.push_back({GameState{eq.q_star}, x});
    }
  } catch (const std::runtime_error&) {
  }
  for (int s = static_cast<int>(states.size()); s < samples; ++s) {
    GameState q;
    q.q.resize(n);
    for (int i = 0; i < n; ++i)
      q.q[i] = dyn.q_max * (0.01 + 0.98 * rng.uniform());
    PopulationState x;
    x.x.resize(n);
    double tot = 0.0;
    for (int i = 0; i < n; ++i) {
      x.x[i] = rng.exponential();
      tot += x.x[i];
    }
    for (int i = 0; i < n; ++i) x.x[i] /= tot;
    states.push_back({std::move(q), std::move(x)});
  }

  for (const auto& [q, x] : states) {
    // (1) grad_x L identity via central differences of L itself
    {
      bool ok = true;
      double worst = 0.0;
      const Vec analytic = grad_x_L(dyn, q, x);
      for (int i = 0; i < n; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x.x[i]));
        PopulationState xp = x, xm = x;
        xp.x[i] += h;
        xm.x[i] -= h;
        double fd;
        try {
          fd = (storage_L(dyn, q, xp) - storage_L(dyn, q, xm)) / (2.0 * h);
        } catch (const std::exception&) {
          ok = false;
          break;
        }
        const double err = std::abs(fd - analytic[i]) /
                           std::max({1.0, std::abs(fd), std::abs(analytic[i])});
        if (!std::isfinite(err)) {
          ok = false;
          break;
        }
        worst = std::max(worst, err);
        if (err > 1e-6) ok = false;
      }
      ++rep.grad_identity_L.samples;
      rep.grad_identity_L.worst = std::max(rep.grad_identity_L.worst, worst);
      if (!ok) ++rep.grad_identity_L.violations;
    }
    // (2) sign of grad_q L . qdot  (qdot = w - F off the caps)
    // (5) zero set of L
    {
      double Lv = 0.0, inner = 0.0;
      bool evaluable = true;
      try {
        Lv = storage_L(dyn, q, x);
        const Vec gq = grad_q_L(dyn, q, x);
        const Vec gxL = grad_x_L(dyn, q, x);
        for (int i = 0; i < n; ++i) inner -= gq[i] * gxL[i];
      } catch (const std::exception&) {
        evaluable = false;
      }
      ++rep.sign_L.samples;
      ++rep.zero_set_L.samples;
      if (!evaluable || !std::isfinite(Lv) || !std::isfinite(inner)) {
        ++rep.sign_L.violations;
        ++rep.zero_set_L.violations;
      } else {
        rep.sign_L.worst = std::max(rep.sign_L.worst, inner);
        if (inner > 1e-10) ++rep.sign_L.violations;
        double fw = 0.0;
        for (int i = 0; i < n; ++i)
          fw = std::max(fw, std::abs(rate_F(dyn, i, q.q[i], x.x[i]) - dyn.w[i]));
        // calibrated pairs: the storage scales quadratically in F - w near
        // the zero set, so the two directions carry different tolerances
        const bool fwd_bad = Lv < 1e-10 && fw >= 1e-4;
        const bool bwd_bad = fw < 1e-8 && Lv >= 1e-10;
        if (Lv < 0.0) rep.zero_set_L.worst = std::min(rep.zero_set_L.worst, Lv);
        if (fwd_bad || bwd_bad || Lv < -1e-12) ++rep.zero_set_L.violations;
      }
    }
    // (3) grad_p S identity against the independently accumulated V
    {
      const auto [gp, gx] = grad_S(rule, q.q, x);
      const Vec v = mean_field_V(rule, q.q, x);
      double worst = 0.0;
      for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(gp[i] - v[i]));
      ++rep.grad_identity_S.samples;
      rep.grad_identity_S.worst = std::max(rep.grad_identity_S.worst, worst);
      if (worst > 1e-12) ++rep.grad_identity_S.violations;
      // (4) sign of grad_x S . V
      double inner = 0.0;
      for (int i = 0; i < n; ++i) inner += gx[i] * v[i];
      ++rep.sign_S.samples;
      rep.sign_S.worst = std::max(rep.sign_S.worst, inner);
      if (inner > 1e-10) ++rep.sign_S.violations;
      // (6) zero set of S
      const double Sv = storage_S(rule, q.q, x);
      const double vn = norm_inf(v);
      ++rep.zero_set_S.samples;
      const bool fwd_bad = Sv < 1e-10 && vn >= 1e-5;
      const bool bwd_bad = vn < 1e-13 && Sv >= 1e-10;
      if (fwd_bad || bwd_bad || Sv < -1e-15) ++rep.zero_set_S.violations;
    }
  }
  return rep;
}

}  // namespace taskgame
