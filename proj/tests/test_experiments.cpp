#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "rplids/experiments.hpp"

using namespace rplids;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rplids_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small and quick: 20 minutes, attack from 10 minutes, 10 trees.
Config quick_config() {
  Config c;
  c.cv.forest.n_trees = 10;
  return c;
}
constexpr Millis kQuick = 1200000;

std::vector<Scenario> sample_plan() {
  auto rq1 = gen_rq1(ExperimentPlan::standard(1));
  std::vector<Scenario> out;
  for (const auto& s : rq1)
    if ((s.attack.kind == AttackKind::BH || s.attack.kind == AttackKind::HF) && s.attack.attacker == 13 &&
        (s.id_nodes[0] == 0 || s.id_nodes[0] == 7 || s.id_nodes[0] == 29))
      out.push_back(s);
  auto rq3 = gen_rq3(ExperimentPlan::standard(3), VotingScheme::majority(50));
  for (const auto& s : rq3)
    if (s.attack.kind == AttackKind::BH && s.attack.attacker == 13 && s.id_nodes.size() == 3) {
      out.push_back(s);
      break;
    }
  auto rq2 = gen_rq2(ExperimentPlan::standard(2));
  for (const auto& s : rq2)
    if (s.attack.kind == AttackKind::HF && s.attack.attacker == 13 && s.id_nodes.size() == 2) {
      out.push_back(s);
      break;
    }
  return out;
}

ResultRow row(AttackKind k, NodeId attacker, NodeId id, double acc) {
  ResultRow r;
  r.rq = 1;
  r.attack = k;
  r.attacker = attacker;
  r.id_nodes = {id};
  r.accuracy = acc;
  r.scenario_id = "x";
  return r;
}

}  // namespace

TEST_CASE("scenario counts") {
  CHECK(gen_rq1(ExperimentPlan::standard(1)).size() == 1827);
  auto one = ExperimentPlan::standard(1);
  one.attacks = {AttackKind::BH};
  one.attacker_pool = {13};
  CHECK(gen_rq1(one).size() == 29);

  const auto rq2 = gen_rq2(ExperimentPlan::standard(2));
  CHECK(rq2.size() == 31626);
  std::size_t total = 0;
  for (std::size_t k = 2; k <= 9; ++k) total += subsets_of_size(kIdPool, k).size();
  CHECK(total == 502);
  CHECK(std::count_if(rq2.begin(), rq2.end(), [](const auto& s) { return s.id_nodes.size() == 2; }) == 2268);

  std::size_t rq3 = 0;
  for (const auto& s : standard_schemes()) rq3 += gen_rq3(ExperimentPlan::standard(3), s).size();
  CHECK(rq3 == 158130);
}

TEST_CASE("generated scenarios are well formed") {
  const auto rq1 = gen_rq1(ExperimentPlan::standard(1));
  std::set<std::string> ids;
  for (const auto& s : rq1) {
    CHECK(s.id_nodes.size() == 1);
    CHECK(s.id_nodes[0] != s.attack.attacker);
    CHECK(s.id == make_scenario_id(s));
    ids.insert(s.id);
  }
  CHECK(ids.size() == rq1.size());
  for (const auto& s : gen_rq2(ExperimentPlan::standard(2))) {
    CHECK(std::is_sorted(s.id_nodes.begin(), s.id_nodes.end()));
    CHECK(std::find(s.id_nodes.begin(), s.id_nodes.end(), s.attack.attacker) == s.id_nodes.end());
  }
  // Stable across calls.
  CHECK(gen_rq1(ExperimentPlan::standard(1)).front().id == rq1.front().id);
  CHECK(make_scenario_id(rq1[0]).size() == 16);
  CHECK(make_scenario_id(rq1[0]) != make_scenario_id(rq1[1]));
}

TEST_CASE("subsets enumerate in order") {
  const auto s = subsets_of_size({4, 5, 6, 7}, 2);
  CHECK(s.size() == 6);
  CHECK(s.front() == std::vector<NodeId>{4, 5});
  CHECK(s.back() == std::vector<NodeId>{6, 7});
  CHECK(subsets_of_size({1, 2}, 3).empty());
}

TEST_CASE("plan files round-trip and reject tampering") {
  auto plan = gen_rq3(ExperimentPlan::standard(3), VotingScheme::majority(70));
  plan.resize(50);
  auto rq1 = gen_rq1(ExperimentPlan::standard(1));
  plan.insert(plan.end(), rq1.begin(), rq1.begin() + 20);
  std::stringstream ss;
  write_plan(ss, plan);
  const auto back = read_plan(ss);
  REQUIRE(back.size() == plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    CHECK(back[i].id == plan[i].id);
    CHECK(canonical_form(back[i]) == canonical_form(plan[i]));
  }
  auto text = ss.str();
  // First row claims to be RQ2 without a matching id.
  const auto pos = text.find(",3,");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 3, ",2,");
  std::istringstream bad(text);
  CHECK_THROWS_AS(read_plan(bad), std::invalid_argument);
}

TEST_CASE("result rows round-trip") {
  ResultRow r = row(AttackKind::DI, 22, 3, 0.8125);
  r.arch = ArchitectureKind::DCID;
  r.scheme = "majority60";
  r.id_nodes = {0, 8, 14};
  r.tpr = std::nan("");
  r.extra_msgs = 12;
  r.extra_bytes = 108;
  std::stringstream ss;
  ss << results_header(false) << '\n' << format_result(r) << '\n';
  const auto back = read_results(ss);
  REQUIRE(back.size() == 1);
  CHECK(format_result(back[0]) == format_result(r));
  CHECK(std::isnan(back[0].tpr));
  CHECK(back[0].id_nodes == r.id_nodes);
}

TEST_CASE("cache: same rows with and without, corruption recovery, warm rerun") {
  const auto dir = scratch("cache");
  const auto cfg = quick_config();
  const auto plan = sample_plan();
  REQUIRE(plan.size() == 8);

  const auto cold = evaluate_scenarios(plan, cfg, 1, kQuick, SimulationCache(""));
  REQUIRE(cold.size() == plan.size());

  RunSummary first;
  const auto cached = evaluate_scenarios(plan, cfg, 1, kQuick, SimulationCache(dir.string()), {}, &first);
  CHECK(first.simulations == 3);
  REQUIRE(cached.size() == cold.size());
  for (std::size_t i = 0; i < cold.size(); ++i) CHECK(format_result(cached[i]) == format_result(cold[i]));

  RunSummary warm;
  const auto again = evaluate_scenarios(plan, cfg, 1, kQuick, SimulationCache(dir.string()), {}, &warm);
  CHECK(warm.simulations == 0);
  CHECK(warm.cache_hits == 3);
  for (std::size_t i = 0; i < cold.size(); ++i) CHECK(format_result(again[i]) == format_result(cold[i]));

  // Damage one entry's window file.
  fs::path victim;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv" && e.path().filename().string().rfind("BH-", 0) == 0) victim = e.path();
  REQUIRE(!victim.empty());
  {
    auto text = slurp(victim);
    text.resize(text.size() / 2);
    std::ofstream(victim) << text;
  }
  std::vector<std::string> notes;
  RunSummary healed;
  const auto fixed = evaluate_scenarios(plan, cfg, 1, kQuick, SimulationCache(dir.string()),
                                        [&](const std::string& m) { notes.push_back(m); }, &healed);
  CHECK(healed.simulations == 1);
  CHECK(std::any_of(notes.begin(), notes.end(), [](const auto& m) {
    return m.find("corrupted cache entry") != std::string::npos && m.find("resimulated with digest") != std::string::npos;
  }));
  for (std::size_t i = 0; i < cold.size(); ++i) CHECK(format_result(fixed[i]) == format_result(cold[i]));

  // Other settings give other keys.
  SimulationCache c(dir.string());
  auto other = cfg;
  other.sim.loss_prob = 0.1;
  CHECK(c.key(cfg, 1, 1, kQuick, std::nullopt) != c.key(other, 1, 1, kQuick, std::nullopt));
  CHECK(c.key(cfg, 1, 1, kQuick, std::nullopt) != c.key(cfg, 1, 2, kQuick, std::nullopt));
}

TEST_CASE("run_plan resumes and a warm rerun is byte-identical") {
  const auto dir = scratch("run");
  const auto cfg = quick_config();
  const auto plan = sample_plan();
  RunOptions opt;
  opt.horizon = kQuick;
  opt.cache_dir = (dir / "cache").string();
  opt.results_path = (dir / "a.csv").string();

  const std::vector<Scenario> head(plan.begin(), plan.begin() + 3);
  const auto s1 = run_plan(head, cfg, opt);
  CHECK(s1.rows_written == 3);
  const auto s2 = run_plan(plan, cfg, opt);
  CHECK(s2.rows_skipped == 3);
  CHECK(s2.rows_written == plan.size() - 3);
  CHECK(s2.failures == 0);
  std::ifstream in(opt.results_path);
  CHECK(read_results(in).size() == plan.size());

  // A fresh file over the warm cache simulates nothing; two fresh files match.
  opt.results_path = (dir / "b.csv").string();
  const auto s3 = run_plan(plan, cfg, opt);
  CHECK(s3.simulations == 0);
  opt.results_path = (dir / "c.csv").string();
  opt.jobs = 2;
  run_plan(plan, cfg, opt);
  CHECK(slurp(dir / "b.csv") == slurp(dir / "c.csv"));

  // Duplicate ids are written once.
  opt.results_path = (dir / "d.csv").string();
  auto dup = head;
  dup.push_back(head[0]);
  const auto s4 = run_plan(dup, cfg, opt);
  CHECK(s4.rows_written == 3);
  CHECK(s4.rows_skipped == 1);
}

TEST_CASE("replicates add spread columns") {
  const auto dir = scratch("rep");
  const auto plan = sample_plan();
  RunOptions opt;
  opt.horizon = kQuick;
  opt.cache_dir = (dir / "cache").string();
  opt.results_path = (dir / "r.csv").string();
  opt.replicates = 2;
  run_plan({plan[0], plan[1]}, quick_config(), opt);
  std::ifstream in(opt.results_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == results_header(true));
  in.seekg(0);
  const auto rows = read_results(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].replicates == 2);
  CHECK(rows[0].accuracy_sd.has_value());
}

TEST_CASE("root accuracy table and major difference") {
  const auto topo = build_grid(6, 5, 20, 25);
  // Node 5 is level 5, node 28 level 8.
  std::vector<ResultRow> rows{row(AttackKind::BH, 5, 0, 0.9), row(AttackKind::BH, 28, 0, 0.5),
                              row(AttackKind::BH, 28, 7, 0.1)};
  const auto t = root_accuracy_table(rows, topo);
  CHECK(t.header == std::vector<std::string>{"attack", "L5", "L8", "major_difference", "attackers", "complete"});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][1] == "0.900000");
  CHECK(t.rows[0][3] == "0.400000");
  CHECK(t.rows[0][5] == "yes");

  std::reverse(rows.begin(), rows.end());
  std::ostringstream a, b;
  t.write_csv(a);
  root_accuracy_table(rows, topo).write_csv(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("aggregates do not depend on row order") {
  Rng rng(5);
  std::vector<ResultRow> rows;
  for (int i = 0; i < 200; ++i) {
    ResultRow r = row(i % 2 ? AttackKind::HF : AttackKind::DI, kAttackerPool[i % 9], 0, rng.uniform());
    r.arch = ArchitectureKind::DCID;
    r.scheme = to_string(standard_schemes()[i % 5]);
    r.id_nodes = i % 3 ? std::vector<NodeId>{0, 1} : kIdPool;
    std::sort(r.id_nodes.begin(), r.id_nodes.end());
    r.tpr = rng.uniform();
    r.fpr = rng.uniform();
    rows.push_back(r);
  }
  auto csv = [](const Table& t) {
    std::ostringstream os;
    t.write_csv(os);
    return os.str();
  };
  const auto a1 = csv(by_count_table(rows)), a2 = csv(best_table(rows)), a3 = csv(voting_table(rows)),
             a4 = csv(tpr_fpr_table(rows));
  for (int k = 0; k < 5; ++k) {
    for (std::size_t i = rows.size() - 1; i > 0; --i) std::swap(rows[i], rows[rng.below(i + 1)]);
    CHECK(csv(by_count_table(rows)) == a1);
    CHECK(csv(best_table(rows)) == a2);
    CHECK(csv(voting_table(rows)) == a3);
    CHECK(csv(tpr_fpr_table(rows)) == a4);
  }
}

TEST_CASE("best table prefers the smallest winning set") {
  ResultRow big = row(AttackKind::BH, 13, 0, 1.0);
  big.arch = ArchitectureKind::CIDwG;
  big.id_nodes = {0, 1, 8};
  ResultRow small = big;
  small.id_nodes = {0, 1};
  ResultRow worse = big;
  worse.id_nodes = {0, 1, 8, 10};
  worse.accuracy = 0.7;
  const auto t = best_table({big, small, worse});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][4] == "1.000000");
  CHECK(t.rows[0][6] == "2");
}

TEST_CASE("heatmap layout, sentinels and stability") {
  const auto topo = build_grid(6, 5, 20, 25);
  std::vector<ResultRow> rows;
  for (NodeId a : kAttackerPool)
    for (NodeId id = 0; id < 30; ++id)
      if (id != a && !(a == 29 && id == 3)) rows.push_back(row(AttackKind::WP, a, id, 0.5 + 0.01 * id));
  const auto hs = heatmaps(rows, topo);
  REQUIRE(hs.size() == 1);
  const auto& h = hs[0];
  CHECK(h.id_nodes.size() == 30);
  CHECK(h.attackers.size() == 9);
  CHECK(h.missing == 1);
  for (std::size_t i = 1; i < h.attackers.size(); ++i) CHECK(topo.level(h.attackers[i - 1]) <= topo.level(h.attackers[i]));
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 9; ++j) {
      if (h.id_nodes[i] == h.attackers[j]) CHECK(h.cells[i][j] == 0.0);
      else if (h.id_nodes[i] == 3 && h.attackers[j] == 29) CHECK(h.cells[i][j] == -1.0);
      else CHECK(h.cells[i][j] == doctest::Approx(0.5 + 0.01 * h.id_nodes[i]));
    }
  std::ostringstream a, b;
  h.write_csv(a);
  std::reverse(rows.begin(), rows.end());
  heatmaps(rows, topo)[0].write_csv(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("id_node,attacker_2,", 0) == 0);
  CHECK(h.render().find('?') != std::string::npos);
}

TEST_CASE("config set, show and parse") {
  Config c;
  c.set("forest.n_trees", "25");
  c.set("sim.loss_prob", "0.125");
  CHECK(c.cv.forest.n_trees == 25);
  CHECK(c.get("sim.loss_prob") == "0.125");
  const auto back = Config::parse(c.show());
  CHECK(back.show() == c.show());
  CHECK(back.sim_fingerprint() == c.sim_fingerprint());
  CHECK(Config{}.sim_fingerprint() != c.sim_fingerprint());
  CHECK_THROWS_AS(c.set("no.such.key", "1"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("forest.n_trees", "many"), std::invalid_argument);
  const auto parsed = Config::parse("# comment\n\nattack.hf_interval_ms = 500\n");
  CHECK(parsed.attack.hf_interval == 500);
  // Classifier settings do not change simulated traffic.
  Config d;
  d.set("forest.n_trees", "7");
  CHECK(d.sim_fingerprint() == Config{}.sim_fingerprint());
}
