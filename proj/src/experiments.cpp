#include "rplids/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rplids/rng.hpp"

namespace fs = std::filesystem;

namespace rplids {

namespace {

std::string real17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string join_ids(const std::vector<NodeId>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(ids[i]);
  }
  return out;
}

std::vector<NodeId> parse_ids(const std::string& s) {
  std::vector<NodeId> out;
  if (s.empty()) return out;
  for (const auto& part : split(s, ';')) out.push_back(static_cast<NodeId>(std::stoul(part)));
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

}  // namespace

// ---------------------------------------------------------------- scenarios

void Scenario::validate(std::size_t node_count) const {
  rplids::validate(attack, node_count);
  if (id_nodes.empty()) throw std::invalid_argument("scenario " + id + ": empty ID node set");
  if (!std::is_sorted(id_nodes.begin(), id_nodes.end()) ||
      std::adjacent_find(id_nodes.begin(), id_nodes.end()) != id_nodes.end())
    throw std::invalid_argument("scenario " + id + ": ID nodes must be ascending and distinct");
  for (NodeId n : id_nodes) {
    if (n >= node_count) throw std::invalid_argument("scenario " + id + ": unknown ID node " + std::to_string(n));
    if (n == attack.attacker) throw std::invalid_argument("scenario " + id + ": attacker is also an ID node");
  }
  switch (arch) {
    case ArchitectureKind::CIDwL:
      if (id_nodes.size() != 1) throw std::invalid_argument("scenario " + id + ": CIDwL takes exactly one ID node");
      if (scheme) throw std::invalid_argument("scenario " + id + ": CIDwL has no voting scheme");
      break;
    case ArchitectureKind::CIDwG:
    case ArchitectureKind::DCID:
      if (id_nodes.size() < 2 || id_nodes.size() > 9)
        throw std::invalid_argument("scenario " + id + ": needs 2 to 9 ID nodes");
      if (arch == ArchitectureKind::DCID && !scheme)
        throw std::invalid_argument("scenario " + id + ": DCID needs a voting scheme");
      if (arch == ArchitectureKind::CIDwG && scheme)
        throw std::invalid_argument("scenario " + id + ": CIDwG has no voting scheme");
      break;
  }
}

std::string canonical_form(const Scenario& s) {
  std::string out = "rq=" + std::to_string(s.rq);
  out += ";attack=" + std::string(to_string(s.attack.kind));
  out += ";attacker=" + std::to_string(s.attack.attacker);
  out += ";start_ms=" + (s.attack.start_time == kNever ? std::string("never") : std::to_string(s.attack.start_time));
  out += ";sf=" + real17(s.attack.sf_drop_prob);
  out += ";hf_ms=" + std::to_string(s.attack.hf_interval);
  out += ";arch=" + std::string(to_string(s.arch));
  out += ";scheme=" + (s.scheme ? to_string(*s.scheme) : std::string());
  out += ";ids=" + join_ids(s.id_nodes);
  return out;
}

std::string make_scenario_id(const Scenario& s) { return hex64(fnv1a(canonical_form(s))); }

ExperimentPlan ExperimentPlan::standard(int rq, std::size_t node_count) {
  if (rq < 1 || rq > 3) throw std::invalid_argument("research question must be 1, 2 or 3");
  ExperimentPlan p;
  p.rq = rq;
  if (rq == 1) {
    for (NodeId n = 0; n < node_count; ++n) p.id_pool.push_back(n);
  } else {
    p.id_pool = kIdPool;
  }
  return p;
}

std::vector<std::vector<NodeId>> subsets_of_size(const std::vector<NodeId>& pool, std::size_t k) {
  std::vector<std::vector<NodeId>> out;
  if (k == 0 || k > pool.size()) return out;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    std::vector<NodeId> s;
    for (auto i : idx) s.push_back(pool[i]);
    out.push_back(std::move(s));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == pool.size() - k + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

namespace {

Scenario make_scenario(int rq, AttackKind kind, NodeId attacker, const AttackConfig& defaults, ArchitectureKind arch,
                       std::vector<NodeId> ids, std::optional<VotingScheme> scheme) {
  Scenario s;
  s.rq = rq;
  s.attack = defaults;
  s.attack.kind = kind;
  s.attack.attacker = attacker;
  s.arch = arch;
  std::sort(ids.begin(), ids.end());
  s.id_nodes = std::move(ids);
  s.scheme = scheme;
  s.id = make_scenario_id(s);
  return s;
}

std::vector<Scenario> gen_sets(const ExperimentPlan& plan, int rq, ArchitectureKind arch,
                               std::optional<VotingScheme> scheme) {
  std::vector<Scenario> out;
  for (AttackKind kind : plan.attacks)
    for (NodeId attacker : plan.attacker_pool)
      for (std::size_t k : plan.subset_sizes)
        for (auto& set : subsets_of_size(plan.id_pool, k)) {
          if (std::find(set.begin(), set.end(), attacker) != set.end()) continue;
          out.push_back(make_scenario(rq, kind, attacker, plan.attack_defaults, arch, std::move(set), scheme));
        }
  return out;
}

}  // namespace

std::vector<Scenario> gen_rq1(const ExperimentPlan& plan) {
  std::vector<Scenario> out;
  for (AttackKind kind : plan.attacks)
    for (NodeId attacker : plan.attacker_pool)
      for (NodeId id : plan.id_pool) {
        if (id == attacker) continue;
        out.push_back(make_scenario(1, kind, attacker, plan.attack_defaults, ArchitectureKind::CIDwL, {id}, std::nullopt));
      }
  return out;
}

std::vector<Scenario> gen_rq2(const ExperimentPlan& plan) {
  return gen_sets(plan, 2, ArchitectureKind::CIDwG, std::nullopt);
}

std::vector<Scenario> gen_rq3(const ExperimentPlan& plan, const VotingScheme& scheme) {
  return gen_sets(plan, 3, ArchitectureKind::DCID, scheme);
}

// ---------------------------------------------------------------- plan files

static const char* kPlanHeader = "scenario_id,rq,attack,attacker,start_ms,sf_drop_prob,hf_interval_ms,arch,scheme,id_nodes";

void write_plan(std::ostream& os, const std::vector<Scenario>& scenarios) {
  os << kPlanHeader << '\n';
  for (const auto& s : scenarios) {
    os << s.id << ',' << s.rq << ',' << to_string(s.attack.kind) << ',' << s.attack.attacker << ','
       << (s.attack.start_time == kNever ? std::string("never") : std::to_string(s.attack.start_time)) << ','
       << real17(s.attack.sf_drop_prob) << ',' << s.attack.hf_interval << ',' << to_string(s.arch) << ','
       << (s.scheme ? to_string(*s.scheme) : std::string()) << ',' << join_ids(s.id_nodes) << '\n';
  }
}

std::vector<Scenario> read_plan(std::istream& is) {
  std::vector<Scenario> out;
  std::string line;
  if (!std::getline(is, line)) return out;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPlanHeader) throw std::invalid_argument("plan: unexpected header '" + line + "'");
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto c = split(line, ',');
    if (c.size() != 10) throw std::invalid_argument("plan line " + std::to_string(line_no) + ": expected 10 columns");
    Scenario s;
    try {
      s.id = c[0];
      s.rq = std::stoi(c[1]);
      s.attack.kind = parse_attack(c[2]);
      s.attack.attacker = static_cast<NodeId>(std::stoul(c[3]));
      s.attack.start_time = c[4] == "never" ? kNever : std::stoll(c[4]);
      s.attack.sf_drop_prob = parse_double(c[5]);
      s.attack.hf_interval = std::stoll(c[6]);
      s.arch = parse_architecture(c[7]);
      if (!c[8].empty()) s.scheme = parse_scheme(c[8]);
      s.id_nodes = parse_ids(c[9]);
    } catch (const std::exception& e) {
      throw std::invalid_argument("plan line " + std::to_string(line_no) + ": " + e.what());
    }
    if (make_scenario_id(s) != s.id)
      throw std::invalid_argument("plan line " + std::to_string(line_no) + ": scenario id does not match its content");
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- result files

std::string results_header(bool with_sd) {
  std::string h = "scenario_id,rq,attack,attacker,arch,scheme,id_nodes,accuracy,tpr,fpr,extra_msgs,extra_bytes,seed,horizon";
  if (with_sd) h += ",accuracy_sd,tpr_sd,fpr_sd,replicates";
  return h;
}

std::string format_result(const ResultRow& r) {
  std::string out = r.scenario_id + ',' + std::to_string(r.rq) + ',' + std::string(to_string(r.attack)) + ',' +
                    std::to_string(r.attacker) + ',' + std::string(to_string(r.arch)) + ',' + r.scheme + ',' +
                    join_ids(r.id_nodes) + ',' + fixed6(r.accuracy) + ',' + fixed6(r.tpr) + ',' + fixed6(r.fpr) + ',' +
                    std::to_string(r.extra_msgs) + ',' + std::to_string(r.extra_bytes) + ',' + std::to_string(r.seed) +
                    ',' + std::to_string(r.horizon_s);
  if (r.accuracy_sd) {
    out += ',' + fixed6(*r.accuracy_sd) + ',' + fixed6(r.tpr_sd.value_or(0)) + ',' + fixed6(r.fpr_sd.value_or(0)) + ',' +
           std::to_string(r.replicates);
  }
  return out;
}

std::vector<ResultRow> read_results(std::istream& is) {
  std::vector<ResultRow> out;
  std::string line;
  if (!std::getline(is, line)) return out;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool with_sd = line == results_header(true);
  if (!with_sd && line != results_header(false)) throw std::invalid_argument("results: unexpected header '" + line + "'");
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto c = split(line, ',');
    if (c.size() != (with_sd ? 18u : 14u))
      throw std::invalid_argument("results line " + std::to_string(line_no) + ": wrong column count");
    ResultRow r;
    try {
      r.scenario_id = c[0];
      r.rq = std::stoi(c[1]);
      r.attack = parse_attack(c[2]);
      r.attacker = static_cast<NodeId>(std::stoul(c[3]));
      r.arch = parse_architecture(c[4]);
      r.scheme = c[5];
      r.id_nodes = parse_ids(c[6]);
      r.accuracy = parse_double(c[7]);
      r.tpr = parse_double(c[8]);
      r.fpr = parse_double(c[9]);
      r.extra_msgs = std::stoull(c[10]);
      r.extra_bytes = std::stoull(c[11]);
      r.seed = std::stoull(c[12]);
      r.horizon_s = std::stoll(c[13]);
      if (with_sd) {
        r.accuracy_sd = parse_double(c[14]);
        r.tpr_sd = parse_double(c[15]);
        r.fpr_sd = parse_double(c[16]);
        r.replicates = std::stoi(c[17]);
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("results line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------- cache

SimulationCache::SimulationCache(std::string dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) fs::create_directories(dir_);
}

std::string SimulationCache::key(const Config& cfg, std::uint64_t topo_digest, std::uint64_t seed, Millis horizon,
                                 const std::optional<AttackConfig>& attack) const {
  std::string canon = "sim=" + hex64(cfg.sim_fingerprint()) + ";topo=" + hex64(topo_digest) +
                      ";seed=" + std::to_string(seed) + ";horizon_ms=" + std::to_string(horizon);
  if (attack) {
    const auto& a = *attack;
    canon += ";attack=" + std::string(to_string(a.kind)) + ";attacker=" + std::to_string(a.attacker) +
             ";start_ms=" + std::to_string(a.start_time) + ";sf=" + real17(a.sf_drop_prob) +
             ";hf_ms=" + std::to_string(a.hf_interval) + ";iv=" + std::to_string(a.iv_reincrement_fires) +
             ";dr=" + std::to_string(a.dr_advertised_rank);
  } else {
    canon += ";benign";
  }
  return (attack ? std::string(to_string(attack->kind)) + "-" + std::to_string(attack->attacker) : std::string("benign")) +
         "-" + hex64(fnv1a(canon));
}

std::optional<SimulationCache::Entry> SimulationCache::load(const std::string& key, std::size_t node_count,
                                                            std::string* note) const {
  const fs::path meta_path = fs::path(dir_) / (key + ".meta");
  const fs::path csv_path = fs::path(dir_) / (key + ".csv");
  if (!fs::exists(meta_path)) return std::nullopt;

  auto corrupt = [&](const std::string& why) -> std::optional<Entry> {
    if (note) *note = "corrupted cache entry " + key + ": " + why;
    return std::nullopt;
  };

  std::map<std::string, std::string> meta;
  {
    std::ifstream in(meta_path);
    std::string line;
    while (std::getline(in, line)) {
      auto eq = line.find('=');
      if (eq != std::string::npos) meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  if (!meta.count("checksum") || !meta.count("digest") || !meta.count("rows")) return corrupt("incomplete metadata");

  std::string text;
  {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) return corrupt("missing feature file");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  if (hex64(fnv1a(text)) != meta["checksum"]) return corrupt("checksum mismatch");

  Entry e;
  try {
    std::istringstream is(text);
    auto rows = read_feature_csv(is);
    if (std::to_string(rows.size()) != meta["rows"]) return corrupt("row count mismatch");
    e.windows.resize(node_count);
    for (auto& w : rows) {
      if (w.node >= node_count) return corrupt("node id out of range");
      e.windows[w.node].push_back(w);
    }
    for (std::size_t n = 0; n < node_count; ++n) {
      const auto& v = e.windows[n];
      if (v.size() != e.windows[0].size()) return corrupt("uneven window counts");
      for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i].window_index != i) return corrupt("window indices out of order");
    }
    e.digest = std::stoull(meta["digest"], nullptr, 16);
  } catch (const std::exception& ex) {
    return corrupt(ex.what());
  }
  return e;
}

void SimulationCache::store(const std::string& key, const Entry& e) const {
  std::vector<FeatureWindow> rows;
  for (const auto& node : e.windows) rows.insert(rows.end(), node.begin(), node.end());
  std::ostringstream os;
  write_feature_csv(os, rows);
  const std::string text = os.str();

  const auto tag = std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  auto atomic_write = [&](const fs::path& target, const std::string& content) {
    const fs::path tmp = target.string() + ".tmp." + tag;
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      if (!out) throw std::runtime_error("cannot write cache file " + tmp.string());
    }
    fs::rename(tmp, target);
  };
  atomic_write(fs::path(dir_) / (key + ".csv"), text);
  std::ostringstream meta;
  meta << "key=" << key << "\ndigest=" << hex64(e.digest) << "\nrows=" << rows.size() << "\nchecksum=" << hex64(fnv1a(text))
       << '\n';
  atomic_write(fs::path(dir_) / (key + ".meta"), meta.str());
  if (!fs::exists(fs::path(dir_) / "features.manifest")) {
    std::ostringstream m;
    write_feature_manifest(m);
    atomic_write(fs::path(dir_) / "features.manifest", m.str());
  }
}

SimulationCache::Entry SimulationCache::get_or_run(const Config& cfg, const GridTopology& topo, std::uint64_t seed,
                                                   Millis horizon, const std::optional<AttackConfig>& attack,
                                                   bool* simulated, std::string* note) const {
  const std::string k = key(cfg, topo.digest(), seed, horizon, attack);
  if (!dir_.empty()) {
    if (auto e = load(k, topo.size(), note)) {
      if (simulated) *simulated = false;
      return *e;
    }
  }
  SimConfig sc = cfg.sim_config(seed, horizon, attack);
  sc.keep_events = false;
  RunResult r = simulate(topo, sc);
  Entry e;
  e.digest = r.digest();
  for (const auto& m : r.monitors) e.windows.push_back(m.windows());
  if (note && !note->empty()) *note += ", resimulated with digest " + hex64(e.digest);
  if (!dir_.empty()) store(k, e);
  if (simulated) *simulated = true;
  return e;
}

// ---------------------------------------------------------------- evaluation

namespace {

std::string attack_group_key(const AttackConfig& a) {
  return std::string(to_string(a.kind)) + "|" + std::to_string(a.attacker) + "|" + std::to_string(a.start_time) + "|" +
         real17(a.sf_drop_prob) + "|" + std::to_string(a.hf_interval) + "|" + std::to_string(a.iv_reincrement_fires) +
         "|" + std::to_string(a.dr_advertised_rank);
}

AttackConfig effective_attack(const Scenario& s, const Config& cfg) {
  AttackConfig a = s.attack;
  a.iv_reincrement_fires = cfg.attack.iv_reincrement_fires;
  a.dr_advertised_rank = cfg.attack.dr_advertised_rank;
  return a;
}

struct Group {
  AttackConfig attack;
  std::vector<std::size_t> members;
};

std::vector<Group> group_scenarios(const std::vector<Scenario>& scenarios, const std::vector<std::size_t>& which,
                                   const Config& cfg) {
  std::vector<Group> groups;
  std::map<std::string, std::size_t> index;
  for (std::size_t i : which) {
    const AttackConfig a = effective_attack(scenarios[i], cfg);
    auto [it, fresh] = index.try_emplace(attack_group_key(a), groups.size());
    if (fresh) groups.push_back({a, {}});
    groups[it->second].members.push_back(i);
  }
  return groups;
}

struct GroupOutcome {
  std::vector<std::optional<ResultRow>> rows;
  std::vector<std::string> messages;
  bool simulated = false;
};

GroupOutcome evaluate_group(const Group& g, const std::vector<Scenario>& scenarios, const Config& cfg,
                            const GridTopology& topo, std::uint64_t seed, Millis horizon,
                            const SimulationCache::Entry& benign, const SimulationCache& cache) {
  GroupOutcome out;
  out.rows.resize(g.members.size());
  std::string note;
  SimulationCache::Entry atk;
  try {
    atk = cache.get_or_run(cfg, topo, seed, horizon, g.attack, &out.simulated, &note);
  } catch (const std::exception& e) {
    for (std::size_t i : g.members)
      out.messages.push_back("scenario " + scenarios[i].id + " failed: simulation error: " + e.what());
    return out;
  }
  if (!note.empty()) out.messages.push_back(note);

  const LabeledRuns runs =
      make_labeled_runs(benign.windows, atk.windows, g.attack.attacker, g.attack.start_time, cfg.sim.window);
  CvSettings cv = cfg.cv;
  cv.seed = seed;
  std::map<NodeId, std::vector<Label>> local;
  std::vector<Label> truth = truth_labels(runs);
  auto local_for = [&](NodeId n) -> const std::vector<Label>& {
    auto it = local.find(n);
    if (it == local.end()) it = local.emplace(n, local_predictions(n, runs, cv)).first;
    return it->second;
  };

  for (std::size_t m = 0; m < g.members.size(); ++m) {
    const Scenario& s = scenarios[g.members[m]];
    try {
      s.validate(topo.size());
      Metrics met;
      switch (s.arch) {
        case ArchitectureKind::CIDwL: met = score(truth, local_for(s.id_nodes.front())); break;
        case ArchitectureKind::CIDwG: met = cidwg_evaluate(s.id_nodes, runs, cv); break;
        case ArchitectureKind::DCID: {
          std::vector<std::vector<Label>> votes;
          for (NodeId n : s.id_nodes) votes.push_back(local_for(n));
          met = score(truth, dcid_vote(votes, *s.scheme));
          break;
        }
      }
      CostParams cp = cfg.cost;
      cp.window = cfg.sim.window;
      const CostReport cost = communication_cost(s.arch, s.id_nodes, horizon, topo, cp);
      ResultRow r;
      r.scenario_id = s.id;
      r.rq = s.rq;
      r.attack = s.attack.kind;
      r.attacker = s.attack.attacker;
      r.arch = s.arch;
      r.scheme = s.scheme ? to_string(*s.scheme) : std::string();
      r.id_nodes = s.id_nodes;
      r.accuracy = met.accuracy;
      r.tpr = met.tpr;
      r.fpr = met.fpr;
      r.extra_msgs = cost.extra_messages;
      r.extra_bytes = cost.extra_bytes;
      r.seed = seed;
      r.horizon_s = horizon / 1000;
      out.rows[m] = std::move(r);
    } catch (const std::exception& e) {
      out.messages.push_back("scenario " + s.id + " failed: " + e.what());
    }
  }
  return out;
}

double mean_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  std::vector<double> sq;
  for (double x : v) sq.push_back((x - m) * (x - m));
  std::sort(sq.begin(), sq.end());
  double s = 0;
  for (double x : sq) s += x;
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<ResultRow> evaluate_scenarios(const std::vector<Scenario>& scenarios, const Config& cfg,
                                          std::uint64_t seed, Millis horizon, const SimulationCache& cache,
                                          const std::function<void(const std::string&)>& log, RunSummary* summary) {
  const GridTopology topo = cfg.topology();
  std::vector<std::size_t> all(scenarios.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  bool sim = false;
  std::string note;
  const auto benign = cache.get_or_run(cfg, topo, seed, horizon, std::nullopt, &sim, &note);
  if (summary) ++(sim ? summary->simulations : summary->cache_hits);
  if (!note.empty() && log) log(note);

  std::vector<ResultRow> out;
  for (const auto& g : group_scenarios(scenarios, all, cfg)) {
    auto o = evaluate_group(g, scenarios, cfg, topo, seed, horizon, benign, cache);
    if (summary) ++(o.simulated ? summary->simulations : summary->cache_hits);
    for (const auto& m : o.messages)
      if (log) log(m);
    for (auto& r : o.rows) {
      if (r) out.push_back(std::move(*r));
      else if (summary) ++summary->failures;
    }
  }
  return out;
}

RunSummary run_plan(const std::vector<Scenario>& scenarios, const Config& cfg, const RunOptions& opt) {
  if (opt.results_path.empty()) throw std::invalid_argument("run_plan needs a results path");
  if (opt.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (opt.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  auto log = [&](const std::string& m) {
    if (opt.log) opt.log(m);
  };

  RunSummary summary;
  const bool with_sd = opt.replicates > 1;
  const Millis horizon_s = opt.horizon / 1000;

  // Rows already present for this seed and horizon are not recomputed.
  std::set<std::string> done;
  bool need_header = true;
  if (fs::exists(opt.results_path) && fs::file_size(opt.results_path) > 0) {
    std::ifstream in(opt.results_path);
    std::string first;
    std::getline(in, first);
    if (first != results_header(with_sd))
      throw std::invalid_argument("existing results file " + opt.results_path + " has a different column layout");
    in.seekg(0);
    for (const auto& r : read_results(in))
      if (r.seed == opt.seed && r.horizon_s == horizon_s) done.insert(r.scenario_id);
    need_header = false;
  }

  std::vector<std::size_t> pending;
  std::set<std::string> queued;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (done.count(scenarios[i].id) || !queued.insert(scenarios[i].id).second) {
      ++summary.rows_skipped;
      continue;
    }
    pending.push_back(i);
  }

  std::ofstream out(opt.results_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open results file " + opt.results_path);
  if (need_header) out << results_header(with_sd) << '\n' << std::flush;
  if (pending.empty()) return summary;

  const GridTopology topo = cfg.topology();
  const SimulationCache cache(opt.cache_dir);
  const auto groups = group_scenarios(scenarios, pending, cfg);

  std::vector<SimulationCache::Entry> benign(opt.replicates);
  for (int r = 0; r < opt.replicates; ++r) {
    bool sim = false;
    std::string note;
    benign[r] = cache.get_or_run(cfg, topo, opt.seed + r, opt.horizon, std::nullopt, &sim, &note);
    ++(sim ? summary.simulations : summary.cache_hits);
    if (!note.empty()) log(note);
  }

  // Workers evaluate whole groups; the calling thread writes finished groups
  // in plan order so the results file does not depend on scheduling.
  std::vector<std::optional<std::vector<GroupOutcome>>> finished(groups.size());
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t g = next.fetch_add(1);
      if (g >= groups.size()) return;
      std::vector<GroupOutcome> reps;
      for (int r = 0; r < opt.replicates; ++r)
        reps.push_back(evaluate_group(groups[g], scenarios, cfg, topo, opt.seed + r, opt.horizon, benign[r], cache));
      std::lock_guard<std::mutex> lock(mu);
      finished[g] = std::move(reps);
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min<int>(opt.jobs, static_cast<int>(groups.size()));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);

  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<GroupOutcome> reps;
    {
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&] { return finished[g].has_value(); });
      reps = std::move(*finished[g]);
      finished[g].reset();
    }
    for (const auto& rep : reps) {
      ++(rep.simulated ? summary.simulations : summary.cache_hits);
      for (const auto& m : rep.messages) log(m);
    }
    for (std::size_t m = 0; m < groups[g].members.size(); ++m) {
      std::vector<ResultRow> got;
      for (const auto& rep : reps)
        if (rep.rows[m]) got.push_back(*rep.rows[m]);
      if (got.size() != reps.size()) {
        ++summary.failures;
        continue;
      }
      ResultRow row = got.front();
      row.seed = opt.seed;
      if (with_sd) {
        std::vector<double> acc, tpr, fpr;
        for (const auto& r : got) {
          acc.push_back(r.accuracy);
          tpr.push_back(r.tpr);
          fpr.push_back(r.fpr);
        }
        row.accuracy = mean_of(acc);
        row.tpr = mean_of(tpr);
        row.fpr = mean_of(fpr);
        row.accuracy_sd = sd_of(acc);
        row.tpr_sd = sd_of(tpr);
        row.fpr_sd = sd_of(fpr);
        row.replicates = opt.replicates;
      }
      out << format_result(row) << '\n';
      ++summary.rows_written;
    }
    out.flush();
    const auto& a = groups[g].attack;
    log("group " + std::to_string(g + 1) + "/" + std::to_string(groups.size()) + " " + std::string(to_string(a.kind)) +
        " attacker " + std::to_string(a.attacker) + ": " + std::to_string(groups[g].members.size()) + " scenarios");
  }
  for (auto& t : pool) t.join();
  return summary;
}

}  // namespace rplids
