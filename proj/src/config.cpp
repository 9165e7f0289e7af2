#include "rplids/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "rplids/rng.hpp"

namespace rplids {

namespace {

template <typename T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("config: bad integer for " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::invalid_argument("config: bad number for " + std::string(key) + ": '" + s + "'");
  return out;
}

std::string real_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct Field {
  std::string key;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, std::string_view)> set;
};

#define RPLIDS_INT(KEY, EXPR)                                                                        \
  Field {                                                                                            \
    KEY, [](const Config& c) { return std::to_string(c.EXPR); },                                     \
        [](Config& c, std::string_view v) { c.EXPR = parse_int<decltype(c.EXPR)>(KEY, v); }         \
  }
#define RPLIDS_REAL(KEY, EXPR)                                                                       \
  Field {                                                                                            \
    KEY, [](const Config& c) { return real_str(c.EXPR); },                                           \
        [](Config& c, std::string_view v) { c.EXPR = parse_real(KEY, v); }                           \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      RPLIDS_INT("grid.cols", grid_cols),
      RPLIDS_INT("grid.rows", grid_rows),
      RPLIDS_REAL("grid.spacing_m", grid_spacing),
      RPLIDS_REAL("grid.tx_range_m", tx_range),
      RPLIDS_INT("rpl.trickle_imin_ms", sim.rpl.trickle_imin_ms),
      RPLIDS_INT("rpl.trickle_doublings", sim.rpl.trickle_doublings),
      RPLIDS_INT("rpl.trickle_k", sim.rpl.trickle_k),
      RPLIDS_INT("rpl.parent_hysteresis", sim.rpl.parent_hysteresis),
      RPLIDS_INT("rpl.dao_period_ms", sim.rpl.dao_period_ms),
      RPLIDS_INT("rpl.route_lifetime_ms", sim.rpl.route_lifetime_ms),
      RPLIDS_INT("rpl.dis_period_ms", sim.rpl.dis_period_ms),
      RPLIDS_REAL("rpl.etx_alpha", sim.rpl.etx_alpha),
      RPLIDS_INT("sim.horizon_ms", sim.horizon),
      RPLIDS_INT("sim.seed", sim.seed),
      RPLIDS_INT("sim.link_latency_ms", sim.link_latency),
      RPLIDS_REAL("sim.loss_prob", sim.loss_prob),
      RPLIDS_INT("sim.data_period_ms", sim.data_period),
      RPLIDS_INT("sim.first_dis_window_ms", sim.first_dis_window),
      RPLIDS_INT("sim.hop_limit", sim.hop_limit),
      RPLIDS_INT("monitor.window_ms", sim.window.width),
      RPLIDS_INT("attack.start_ms", attack.start_time),
      RPLIDS_REAL("attack.sf_drop_prob", attack.sf_drop_prob),
      RPLIDS_INT("attack.hf_interval_ms", attack.hf_interval),
      RPLIDS_INT("attack.iv_reincrement_fires", attack.iv_reincrement_fires),
      RPLIDS_INT("attack.dr_advertised_rank", attack.dr_advertised_rank),
      RPLIDS_INT("forest.n_trees", cv.forest.n_trees),
      RPLIDS_INT("forest.mtry", cv.forest.mtry),
      RPLIDS_INT("forest.min_leaf", cv.forest.min_leaf),
      RPLIDS_INT("forest.max_depth", cv.forest.max_depth),
      RPLIDS_INT("cv.k_folds", cv.k_folds),
      RPLIDS_INT("cost.feature_bytes", cost.feature_bytes),
      RPLIDS_INT("cost.header_bytes", cost.header_bytes),
      RPLIDS_INT("cost.alarm_bytes", cost.alarm_bytes),
      RPLIDS_INT("cost.central_node", cost.central),
  };
  return f;
}

#undef RPLIDS_INT
#undef RPLIDS_REAL

const Field& find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
}

}  // namespace

void Config::set(std::string_view key, std::string_view value) {
  find_field(key).set(*this, trim(value));
  cost.window = sim.window = WindowSpec{sim.window.width, sim.window.width};
}

std::string Config::get(std::string_view key) const { return find_field(key).get(*this); }

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return k;
}

std::string Config::show() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

Config Config::parse(std::string_view text) {
  Config c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

GridTopology Config::topology() const { return build_grid(grid_cols, grid_rows, grid_spacing, tx_range); }

SimConfig Config::sim_config(std::uint64_t seed, Millis horizon, std::optional<AttackConfig> atk) const {
  SimConfig s = sim;
  s.seed = seed;
  s.horizon = horizon;
  s.attack = std::move(atk);
  return s;
}

std::uint64_t Config::sim_fingerprint() const {
  std::string canon;
  for (const auto& f : fields()) {
    // Attack parameters are part of each attack run's own key.
    if (f.key.rfind("forest.", 0) == 0 || f.key.rfind("cv.", 0) == 0 || f.key.rfind("cost.", 0) == 0 ||
        f.key.rfind("attack.", 0) == 0)
      continue;
    if (f.key == "sim.horizon_ms" || f.key == "sim.seed") continue;
    canon += f.key + "=" + f.get(*this) + ";";
  }
  return fnv1a(canon);
}

}  // namespace rplids
