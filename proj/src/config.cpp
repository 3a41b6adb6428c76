#include "taskgame/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "taskgame/trajectory.hpp"

namespace taskgame {

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::meanfield: return "meanfield";
    case RunMode::finite: return "finite";
    case RunMode::sweep: return "sweep";
    case RunMode::passivity_report: return "passivity-report";
  }
  return "?";
}

std::optional<RunMode> parse_mode(const std::string& text) {
  if (text == "meanfield") return RunMode::meanfield;
  if (text == "finite") return RunMode::finite;
  if (text == "sweep") return RunMode::sweep;
  if (text == "passivity-report") return RunMode::passivity_report;
  return std::nullopt;
}

namespace {

std::string trim(std::string s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.erase(s.begin());
  while (!s.empty() && is_space(s.back())) s.pop_back();
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
  bool consumed = false;
};

// Parsed key/value store with typed, error-collecting accessors.
class Extractor {
 public:
  std::map<std::string, Entry> entries;
  std::vector<ConfigIssue>* issues = nullptr;

  bool has(const std::string& key) const { return entries.count(key) > 0; }

  const Entry* take(const std::string& key) {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    it->second.consumed = true;
    return &it->second;
  }

  void error(const std::string& field, const std::string& msg, int line = 0) {
    issues->push_back({line, field, msg});
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const Entry* e = take(key);
    return e ? e->value : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) {
    const Entry* e = take(key);
    if (!e) return fallback;
    if (e->value == "true") return true;
    if (e->value == "false") return false;
    error(key, "expected true or false, got '" + e->value + "'", e->line);
    return fallback;
  }

  std::optional<double> parse_double(const std::string& key,
                                     const std::string& text, int line) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
      error(key, "expected a number, got '" + t + "'", line);
      return std::nullopt;
    }
    return v;
  }

  double get_double(const std::string& key, double fallback) {
    const Entry* e = take(key);
    if (!e) return fallback;
    return parse_double(key, e->value, e->line).value_or(fallback);
  }

  std::optional<double> get_required_double(const std::string& key) {
    const Entry* e = take(key);
    if (!e) {
      error(key, "missing required key");
      return std::nullopt;
    }
    return parse_double(key, e->value, e->line);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback,
                        bool required) {
    const Entry* e = take(key);
    if (!e) {
      if (required) error(key, "missing required key");
      return fallback;
    }
    const std::string t = trim(e->value);
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
      error(key, "expected an unsigned integer, got '" + t + "'", e->line);
      return fallback;
    }
    return v;
  }

  std::optional<Vec> get_vec(const std::string& key, bool required) {
    const Entry* e = take(key);
    if (!e) {
      if (required) error(key, "missing required key");
      return std::nullopt;
    }
    Vec out;
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto v = parse_double(key, item, e->line);
      if (!v) return std::nullopt;
      out.push_back(*v);
    }
    if (out.empty()) {
      error(key, "expected a comma-separated list", e->line);
      return std::nullopt;
    }
    return out;
  }
};

std::optional<RevisionSchedule> load_schedule_csv(const std::string& path,
                                                  Extractor& ex,
                                                  const std::string& field) {
  std::ifstream in(path);
  if (!in) {
    ex.error(field, "cannot open schedule file '" + path + "'");
    return std::nullopt;
  }
  RevisionSchedule sched;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || lineno == 1) continue;  // header m,t_m,lambda_m
    std::stringstream ss(line);
    std::string m, t, lam;
    if (!std::getline(ss, m, ',') || !std::getline(ss, t, ',') ||
        !std::getline(ss, lam, ',')) {
      ex.error(field, "malformed schedule row in '" + path + "'", 0);
      return std::nullopt;
    }
    const auto tv = ex.parse_double(field, t, 0);
    const auto lv = ex.parse_double(field, lam, 0);
    if (!tv || !lv) return std::nullopt;
    sched.t.push_back(*tv);
    sched.lam.push_back(*lv);
  }
  try {
    sched.validate();
  } catch (const std::exception& e) {
    ex.error(field, std::string("invalid schedule: ") + e.what());
    return std::nullopt;
  }
  return sched;
}

std::optional<DisturbanceModel> load_disturbance_table(const std::string& path,
                                                       Extractor& ex,
                                                       const std::string& field) {
  std::ifstream in(path);
  if (!in) {
    ex.error(field, "cannot open disturbance table '" + path + "'");
    return std::nullopt;
  }
  std::vector<double> times;
  std::vector<Vec> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || lineno == 1) continue;  // header t,xi_1..xi_n
    std::stringstream ss(line);
    std::string item;
    Vec row;
    while (std::getline(ss, item, ',')) {
      const auto v = ex.parse_double(field, item, 0);
      if (!v) return std::nullopt;
      row.push_back(*v);
    }
    if (row.size() < 2) {
      ex.error(field, "malformed disturbance row in '" + path + "'");
      return std::nullopt;
    }
    times.push_back(row.front());
    values.emplace_back(row.begin() + 1, row.end());
  }
  try {
    return DisturbanceModel::from_table(std::move(times), std::move(values));
  } catch (const std::exception& e) {
    ex.error(field, std::string("invalid disturbance table: ") + e.what());
    return std::nullopt;
  }
}

void validate_cross_fields(const ExperimentConfig& cfg, Extractor& ex) {
  const int n = static_cast<int>(cfg.dyn.w.size());
  try {
    cfg.dyn.validate();
  } catch (const std::exception& e) {
    ex.error("dynamics", e.what());
  }
  if (cfg.mode != RunMode::passivity_report) {
    if (static_cast<int>(cfg.q0.size()) != n)
      ex.error("initial.q", "length must match the number of tasks");
    if (static_cast<int>(cfg.x0.size()) != n)
      ex.error("initial.x", "length must match the number of tasks");
    for (double v : cfg.q0)
      if (v < 0.0 || v > cfg.dyn.q_max)
        ex.error("initial.q", "components must lie in [0, q_max]");
    if (static_cast<int>(cfg.x0.size()) == n) {
      double s = 0.0;
      for (double v : cfg.x0) {
        if (v < 0.0) ex.error("initial.x", "components must be nonnegative");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9)
        ex.error("initial.x", "must sum to 1 (got " + format_double(s) + ")");
    }
  }
  if (cfg.horizon < 0.0) ex.error("run.horizon", "must be nonnegative");
  if (cfg.step <= 0.0) ex.error("run.step", "must be positive");
  if (cfg.cadence <= 0.0) ex.error("run.cadence", "must be positive");
  if (cfg.rule.varrho <= 0.0) ex.error("rule.varrho", "must be positive");

  const bool finite_engine =
      cfg.mode == RunMode::finite ||
      (cfg.mode == RunMode::sweep && cfg.sweep_engine == "finite");
  if (finite_engine) {
    if (cfg.n_agents < 2) ex.error("graph.n_agents", "need at least 2 agents");
    if (!(cfg.p_edge > 0.0 && cfg.p_edge <= 1.0))
      ex.error("graph.p_edge", "must be in (0, 1]");
    if (!(cfg.leader_fraction > 0.0 && cfg.leader_fraction <= 1.0))
      ex.error("graph.leader_fraction", "must be in (0, 1]");
    // worst initial row sum of switch probabilities must stay sub-stochastic
    if (static_cast<int>(cfg.q0.size()) == n) {
      double worst = 0.0;
      for (int j = 0; j < n; ++j) {
        double row = 0.0;
        for (int i = 0; i < n; ++i)
          row += std::max(0.0, cfg.q0[i] - cfg.q0[j]);
        worst = std::max(worst, row);
      }
      if (cfg.rule.varrho * worst > 1.0 + 1e-12)
        ex.error("rule.varrho",
                 "too large for the initial payoff spread: varrho * max_j "
                 "sum_i [q0_i - q0_j]_+ = " +
                     format_double(cfg.rule.varrho * worst) + " > 1");
    }
  }
  if (cfg.mode != RunMode::passivity_report && !cfg.controller_enabled &&
      cfg.lambda <= 0.0)
    ex.error("clock.lambda", "must be positive");
  if (cfg.controller_enabled) {
    try {
      cfg.controller.validate();
    } catch (const std::exception& e) {
      ex.error("controller", e.what());
    }
  }
  if (cfg.mode == RunMode::sweep) {
    if (cfg.sweep_engine != "meanfield" && cfg.sweep_engine != "finite")
      ex.error("sweep.engine", "must be meanfield or finite");
    if (cfg.sweep_lambda_grid.empty())
      ex.error("sweep.lambda_grid", "missing required key");
    for (double l : cfg.sweep_lambda_grid)
      if (l <= 0.0) ex.error("sweep.lambda_grid", "rates must be positive");
    if (cfg.sweep_seeds.empty()) ex.error("sweep.seeds", "seed list must not be empty");
    if (cfg.horizon_over_lambda < 0.0)
      ex.error("sweep.horizon_over_lambda", "must be nonnegative");
  }
  if (cfg.mode == RunMode::passivity_report && cfg.passivity_samples < 1)
    ex.error("passivity.samples", "need at least one sample");
  if (cfg.disturbance.amplitude < 0.0)
    ex.error("disturbance.amplitude", "must be nonnegative");
}

}  // namespace

LoadResult parse_config_text(const std::string& text) {
  LoadResult result;
  Extractor ex;
  ex.issues = &result.issues;

  std::stringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        result.issues.push_back({lineno, "", "unterminated section header"});
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        result.issues.push_back({lineno, "", "empty section name"});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      result.issues.push_back({lineno, "", "expected key = value"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      result.issues.push_back({lineno, "", "empty key"});
      continue;
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (ex.entries.count(full))
      result.issues.push_back({lineno, full, "duplicate key"});
    ex.entries[full] = Entry{value, lineno, false};
  }

  ExperimentConfig cfg;

  // [run]
  {
    const Entry* e = ex.take("run.mode");
    if (!e) {
      ex.error("run.mode", "missing required key");
    } else if (const auto m = parse_mode(e->value)) {
      cfg.mode = *m;
    } else {
      ex.error("run.mode", "unknown mode '" + e->value + "'", e->line);
    }
  }
  cfg.seed = ex.get_u64("run.seed", 0, /*required=*/true);
  cfg.out_dir = ex.get_string("run.out", cfg.out_dir);
  cfg.horizon = ex.get_double("run.horizon", cfg.horizon);
  cfg.step = ex.get_double("run.step", cfg.step);
  cfg.cadence = ex.get_double("run.cadence", cfg.cadence);

  // [dynamics]
  {
    const auto R = ex.get_vec("dynamics.R", true);
    const auto alpha = ex.get_vec("dynamics.alpha", true);
    const auto beta = ex.get_vec("dynamics.beta", true);
    const auto w = ex.get_vec("dynamics.w", true);
    const auto q_max = ex.get_required_double("dynamics.q_max");
    if (R) cfg.dyn.R = *R;
    if (alpha) cfg.dyn.alpha = *alpha;
    if (beta) cfg.dyn.beta = *beta;
    if (w) cfg.dyn.w = *w;
    if (q_max) cfg.dyn.q_max = *q_max;
  }

  // [rule]
  {
    const std::string kind = ex.get_string("rule.kind", "smith");
    if (kind != "smith") ex.error("rule.kind", "only 'smith' is supported");
    const auto varrho = ex.get_required_double("rule.varrho");
    if (varrho && *varrho > 0.0) cfg.rule = LearningRule::smith(*varrho);
  }

  // [graph]
  cfg.n_agents = static_cast<int>(ex.get_u64("graph.n_agents", 0, false));
  cfg.p_edge = ex.get_double("graph.p_edge", cfg.p_edge);
  cfg.leader_fraction = ex.get_double("graph.leader_fraction", cfg.leader_fraction);

  // [initial]
  if (const auto q = ex.get_vec("initial.q", cfg.mode != RunMode::passivity_report))
    cfg.q0 = *q;
  {
    const Entry* e = ex.take("initial.x");
    if (!e) {
      if (cfg.mode != RunMode::passivity_report)
        ex.error("initial.x", "missing required key");
    } else if (trim(e->value) == "uniform") {
      const int n = static_cast<int>(cfg.dyn.w.size());
      if (n > 0) cfg.x0.assign(n, 1.0 / n);
    } else {
      Vec out;
      std::stringstream ss(e->value);
      std::string item;
      bool bad = false;
      while (std::getline(ss, item, ',')) {
        const auto v = ex.parse_double("initial.x", item, e->line);
        if (!v) {
          bad = true;
          break;
        }
        out.push_back(*v);
      }
      if (!bad) cfg.x0 = std::move(out);
    }
  }
  {
    const std::string est = ex.get_string("initial.estimates", "zero");
    if (est == "zero") {
      cfg.estimates_start_true = false;
    } else if (est == "true") {
      cfg.estimates_start_true = true;
    } else {
      ex.error("initial.estimates", "expected 'zero' or 'true'");
    }
  }

  // [clock]
  cfg.lambda = ex.get_double("clock.lambda", cfg.lambda);
  cfg.schedule_path = ex.get_string("clock.schedule", "");
  if (!cfg.schedule_path.empty())
    cfg.schedule = load_schedule_csv(cfg.schedule_path, ex, "clock.schedule");

  // [controller]
  cfg.controller_enabled = ex.get_bool("controller.enabled", false);
  cfg.controller.gamma = ex.get_double("controller.gamma", cfg.controller.gamma);
  cfg.controller.tau = ex.get_double("controller.tau", cfg.controller.tau);
  cfg.controller.epsilon = ex.get_double("controller.epsilon", cfg.controller.epsilon);
  cfg.controller.lambda0 = ex.get_double("controller.lambda0", cfg.controller.lambda0);

  // [estimation]
  cfg.consensus_include_self = ex.get_bool("estimation.include_self", false);
  cfg.leaders_observe_continuously =
      ex.get_bool("estimation.continuous_leader_observation", false);
  {
    const std::string src = ex.get_string("estimation.trigger_source", "oracle");
    if (src == "oracle") {
      cfg.trigger_uses_leader_estimate = false;
    } else if (src == "leader") {
      cfg.trigger_uses_leader_estimate = true;
    } else {
      ex.error("estimation.trigger_source", "expected 'oracle' or 'leader'");
    }
  }
  cfg.check_xi_bound = ex.get_bool("estimation.check_xi_bound", true);

  // [disturbance]
  {
    const std::string kind = ex.get_string("disturbance.kind", "none");
    const double amplitude = ex.get_double("disturbance.amplitude", 0.0);
    cfg.disturbance_table_path = ex.get_string("disturbance.table", "");
    const double omega1 = ex.get_double("disturbance.omega1", 0.7);
    const double omega2 = ex.get_double("disturbance.omega2", 1.3);
    const double decay = ex.get_double("disturbance.decay_rate", 0.05);
    if (kind == "none") {
      cfg.disturbance = DisturbanceModel::none_model();
    } else if (kind == "bounded_sinusoid") {
      cfg.disturbance = DisturbanceModel::sinusoid(amplitude);
    } else if (kind == "decaying") {
      cfg.disturbance = DisturbanceModel::decaying_sinusoid(amplitude, decay);
    } else if (kind == "table") {
      if (cfg.disturbance_table_path.empty()) {
        ex.error("disturbance.table", "missing table path for kind = table");
      } else if (auto d = load_disturbance_table(cfg.disturbance_table_path, ex,
                                                 "disturbance.table")) {
        cfg.disturbance = *d;
      }
    } else {
      ex.error("disturbance.kind", "unknown kind '" + kind + "'");
    }
    cfg.disturbance.omega1 = omega1;
    cfg.disturbance.omega2 = omega2;
  }

  // [sweep]
  cfg.sweep_engine = ex.get_string("sweep.engine", cfg.sweep_engine);
  if (const auto g = ex.get_vec("sweep.lambda_grid", cfg.mode == RunMode::sweep))
    cfg.sweep_lambda_grid = *g;
  {
    const Entry* e = ex.take("sweep.seeds");
    if (!e) {
      if (cfg.mode == RunMode::sweep)
        ex.error("sweep.seeds", "missing required key");
    } else {
      std::stringstream ss(e->value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        std::uint64_t v = 0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
          ex.error("sweep.seeds", "expected unsigned integers", e->line);
          break;
        }
        cfg.sweep_seeds.push_back(v);
      }
    }
  }
  cfg.horizon_over_lambda = ex.get_double("sweep.horizon_over_lambda", 0.0);
  cfg.sweep_write_trajectories = ex.get_bool("sweep.write_trajectories", true);

  // [passivity]
  cfg.passivity_samples =
      static_cast<int>(ex.get_u64("passivity.samples", 1000, false));

  for (const auto& [key, entry] : ex.entries)
    if (!entry.consumed)
      result.issues.push_back({entry.line, key, "unknown key"});

  if (result.issues.empty()) validate_cross_fields(cfg, ex);
  if (result.issues.empty()) result.config = std::move(cfg);
  return result;
}

LoadResult load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    LoadResult r;
    r.issues.push_back({0, "", "cannot open config file '" + path + "'"});
    return r;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

std::string join(const Vec& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

}  // namespace

std::string manifest_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "# " << kVersionString << " run manifest\n";
  os << "# re-run with: taskgame --config <this file> [--out <dir>]\n";
  os << "[run]\n";
  os << "mode = " << to_string(cfg.mode) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "out = " << cfg.out_dir << "\n";
  os << "horizon = " << format_double(cfg.horizon) << "\n";
  os << "step = " << format_double(cfg.step) << "\n";
  os << "cadence = " << format_double(cfg.cadence) << "\n";
  os << "\n[dynamics]\n";
  os << "R = " << join(cfg.dyn.R) << "\n";
  os << "alpha = " << join(cfg.dyn.alpha) << "\n";
  os << "beta = " << join(cfg.dyn.beta) << "\n";
  os << "w = " << join(cfg.dyn.w) << "\n";
  os << "q_max = " << format_double(cfg.dyn.q_max) << "\n";
  os << "\n[rule]\n";
  os << "kind = smith\n";
  os << "varrho = " << format_double(cfg.rule.varrho) << "\n";
  os << "\n[graph]\n";
  os << "n_agents = " << cfg.n_agents << "\n";
  os << "p_edge = " << format_double(cfg.p_edge) << "\n";
  os << "leader_fraction = " << format_double(cfg.leader_fraction) << "\n";
  os << "\n[initial]\n";
  if (!cfg.q0.empty()) os << "q = " << join(cfg.q0) << "\n";
  if (!cfg.x0.empty()) os << "x = " << join(cfg.x0) << "\n";
  os << "estimates = " << (cfg.estimates_start_true ? "true" : "zero") << "\n";
  os << "\n[clock]\n";
  os << "lambda = " << format_double(cfg.lambda) << "\n";
  if (!cfg.schedule_path.empty()) os << "schedule = " << cfg.schedule_path << "\n";
  os << "\n[controller]\n";
  os << "enabled = " << (cfg.controller_enabled ? "true" : "false") << "\n";
  os << "gamma = " << format_double(cfg.controller.gamma) << "\n";
  os << "tau = " << format_double(cfg.controller.tau) << "\n";
  os << "epsilon = " << format_double(cfg.controller.epsilon) << "\n";
  os << "lambda0 = " << format_double(cfg.controller.lambda0) << "\n";
  os << "\n[estimation]\n";
  os << "include_self = " << (cfg.consensus_include_self ? "true" : "false") << "\n";
  os << "continuous_leader_observation = "
     << (cfg.leaders_observe_continuously ? "true" : "false") << "\n";
  os << "trigger_source = "
     << (cfg.trigger_uses_leader_estimate ? "leader" : "oracle") << "\n";
  os << "check_xi_bound = " << (cfg.check_xi_bound ? "true" : "false") << "\n";
  os << "\n[disturbance]\n";
  switch (cfg.disturbance.kind) {
    case DisturbanceModel::Kind::none:
      os << "kind = none\n";
      break;
    case DisturbanceModel::Kind::bounded_sinusoid:
      os << "kind = bounded_sinusoid\n";
      break;
    case DisturbanceModel::Kind::decaying:
      os << "kind = decaying\n";
      break;
    case DisturbanceModel::Kind::table:
      os << "kind = table\n";
      break;
  }
  os << "amplitude = " << format_double(cfg.disturbance.amplitude) << "\n";
  os << "omega1 = " << format_double(cfg.disturbance.omega1) << "\n";
  os << "omega2 = " << format_double(cfg.disturbance.omega2) << "\n";
  os << "decay_rate = " << format_double(cfg.disturbance.decay_rate) << "\n";
  if (!cfg.disturbance_table_path.empty())
    os << "table = " << cfg.disturbance_table_path << "\n";
  if (cfg.mode == RunMode::sweep) {
    os << "\n[sweep]\n";
    os << "engine = " << cfg.sweep_engine << "\n";
    os << "lambda_grid = " << join(cfg.sweep_lambda_grid) << "\n";
    os << "seeds = ";
    for (std::size_t i = 0; i < cfg.sweep_seeds.size(); ++i) {
      if (i) os << ", ";
      os << cfg.sweep_seeds[i];
    }
    os << "\n";
    os << "horizon_over_lambda = " << format_double(cfg.horizon_over_lambda) << "\n";
    os << "write_trajectories = "
       << (cfg.sweep_write_trajectories ? "true" : "false") << "\n";
  }
  os << "\n[passivity]\n";
  os << "samples = " << cfg.passivity_samples << "\n";
  return os.str();
}

}  // namespace taskgame
