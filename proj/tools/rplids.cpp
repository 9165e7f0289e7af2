// Command-line front end: plan generation, batch runs, reports, heatmaps and
// one-off simulations.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rplids/experiments.hpp"

using namespace rplids;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;

  Config load() const {
    Config c = config_path.empty() ? Config{} : Config::load(config_path);
    for (const auto& kv : overrides) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return c;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value settings file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "override one setting, key=value (repeatable)");
}

// Writes to a file, or stdout when path is empty or "-".
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
}

std::vector<ResultRow> load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_results(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RPL attack simulator and IDS placement experiments"};
  app.require_subcommand(1);
  Common common;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a scenario plan");
  add_common(gen, common);
  int rq = 1;
  std::string scheme_arg, gen_out;
  gen->add_option("--rq", rq, "research question")->required()->check(CLI::Range(1, 3));
  gen->add_option("--scheme", scheme_arg, "voting scheme for --rq 3 (minority, majority50 ...); default: all five");
  gen->add_option("-o,--output", gen_out, "plan file (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "evaluate a plan, appending to a results file");
  add_common(run, common);
  std::string plan_path, run_out, cache_dir;
  std::optional<long long> horizon_s;
  std::optional<std::uint64_t> seed;
  int jobs = 1, replicates = 1;
  bool quiet = false;
  run->add_option("--plan", plan_path, "plan file")->required()->check(CLI::ExistingFile);
  run->add_option("--horizon", horizon_s, "simulated seconds (default from sim.horizon_ms)");
  run->add_option("--seed", seed, "base seed (default from sim.seed)");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--cache", cache_dir, "simulation cache directory");
  run->add_option("-o,--output", run_out, "results CSV")->required();
  run->add_option("--replicates", replicates, "seeds per scenario; > 1 adds stddev columns")
      ->check(CLI::PositiveNumber);
  run->add_flag("-q,--quiet", quiet, "only print the summary");

  // report
  auto* report = app.add_subcommand("report", "summary tables from a results file");
  add_common(report, common);
  std::string results_path, table_name, report_out;
  report->add_option("--results", results_path, "results CSV")->required()->check(CLI::ExistingFile);
  report->add_option("--table", table_name, "table kind")
      ->required()
      ->check(CLI::IsMember({"root-accuracy", "best", "voting", "tpr-fpr", "by-count"}));
  report->add_option("-o,--output", report_out, "output CSV (default stdout)");

  // heatmap
  auto* heat = app.add_subcommand("heatmap", "per-attack ID/attacker accuracy matrices");
  add_common(heat, common);
  std::string heat_results, heat_dir;
  heat->add_option("--results", heat_results, "results CSV")->required()->check(CLI::ExistingFile);
  heat->add_option("-o,--output", heat_dir, "output directory")->required();

  // topo
  auto* topo_cmd = app.add_subcommand("topo", "topology information");
  add_common(topo_cmd, common);
  bool dump = false;
  topo_cmd->add_flag("--dump", dump, "print id,x,y,level");

  // config
  auto* config_cmd = app.add_subcommand("config", "settings");
  add_common(config_cmd, common);
  bool show = false;
  config_cmd->add_flag("--show", show, "print every setting");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run one simulation and print its digest");
  add_common(sim_cmd, common);
  std::string attack_name, trace_out, features_out;
  NodeId attacker = kNoNode;
  std::optional<long long> start_ms;
  std::optional<long long> sim_horizon_s;
  std::optional<std::uint64_t> sim_seed;
  sim_cmd->add_option("--attack", attack_name, "DR, IV, BH, SF, WP, DI or HF (default: benign)");
  sim_cmd->add_option("--attacker", attacker, "attacker node id");
  sim_cmd->add_option("--start-ms", start_ms, "attack start (default from attack.start_ms)");
  sim_cmd->add_option("--horizon", sim_horizon_s, "simulated seconds");
  sim_cmd->add_option("--seed", sim_seed, "seed");
  sim_cmd->add_option("--trace", trace_out, "write the event trace");
  sim_cmd->add_option("--features", features_out, "write per-node feature windows");

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = common.load();
    const GridTopology topo = cfg.topology();

    if (*gen) {
      ExperimentPlan plan = ExperimentPlan::standard(rq, topo.size());
      plan.attack_defaults = cfg.attack;
      std::vector<Scenario> out;
      if (rq == 1) out = gen_rq1(plan);
      else if (rq == 2) out = gen_rq2(plan);
      else if (!scheme_arg.empty()) out = gen_rq3(plan, parse_scheme(scheme_arg));
      else
        for (const auto& s : standard_schemes()) {
          auto part = gen_rq3(plan, s);
          out.insert(out.end(), part.begin(), part.end());
        }
      if (rq != 3 && !scheme_arg.empty()) throw std::invalid_argument("--scheme only applies to --rq 3");
      emit(gen_out, [&](std::ostream& os) { write_plan(os, out); });
      std::cerr << out.size() << " scenarios\n";
    } else if (*run) {
      std::ifstream in(plan_path);
      const auto scenarios = read_plan(in);
      RunOptions opt;
      opt.seed = seed.value_or(cfg.sim.seed);
      opt.horizon = horizon_s ? *horizon_s * 1000 : cfg.sim.horizon;
      opt.jobs = jobs;
      opt.cache_dir = cache_dir;
      opt.results_path = run_out;
      opt.replicates = replicates;
      opt.log = [&](const std::string& m) {
        if (!quiet || m.find("failed") != std::string::npos || m.find("corrupt") != std::string::npos)
          std::cerr << m << '\n';
      };
      {
        std::ofstream t(run_out + ".topology.csv");
        t << topo.dump();
        std::ofstream c(run_out + ".config.txt");
        c << cfg.show();
      }
      const auto s = run_plan(scenarios, cfg, opt);
      std::cout << "rows written " << s.rows_written << ", skipped " << s.rows_skipped << ", failed " << s.failures
                << ", simulations " << s.simulations << ", cache hits " << s.cache_hits << '\n';
      return s.failures ? 2 : 0;
    } else if (*report) {
      const auto rows = load_results(results_path);
      Table t;
      if (table_name == "root-accuracy") t = root_accuracy_table(rows, topo);
      else if (table_name == "best") t = best_table(rows);
      else if (table_name == "voting") t = voting_table(rows);
      else if (table_name == "tpr-fpr") t = tpr_fpr_table(rows);
      else t = by_count_table(rows);
      emit(report_out, [&](std::ostream& os) { t.write_csv(os); });
    } else if (*heat) {
      const auto maps = heatmaps(load_results(heat_results), topo);
      fs::create_directories(heat_dir);
      for (const auto& h : maps) {
        emit((fs::path(heat_dir) / (std::string(to_string(h.attack)) + ".csv")).string(),
             [&](std::ostream& os) { h.write_csv(os); });
        std::cout << h.render() << '\n';
        if (h.missing) std::cerr << "warning: " << to_string(h.attack) << " has " << h.missing << " missing cells\n";
      }
    } else if (*topo_cmd) {
      if (dump) std::cout << topo.dump();
      else std::cout << topo.size() << " nodes, " << topo.cols() << "x" << topo.rows() << ", digest "
                     << hex64(topo.digest()) << '\n';
    } else if (*config_cmd) {
      std::cout << cfg.show();
    } else if (*sim_cmd) {
      std::optional<AttackConfig> atk;
      if (!attack_name.empty()) {
        AttackConfig a = cfg.attack;
        a.kind = parse_attack(attack_name);
        a.attacker = attacker;
        if (start_ms) a.start_time = *start_ms;
        atk = a;
      }
      SimConfig sc = cfg.sim_config(sim_seed.value_or(cfg.sim.seed), sim_horizon_s ? *sim_horizon_s * 1000 : cfg.sim.horizon,
                                    atk);
      sc.keep_events = !trace_out.empty();
      const RunResult r = simulate(topo, sc);
      if (!trace_out.empty()) emit(trace_out, [&](std::ostream& os) { os << r.trace.to_text(); });
      if (!features_out.empty()) {
        std::vector<FeatureWindow> rows;
        for (const auto& m : r.monitors) rows.insert(rows.end(), m.windows().begin(), m.windows().end());
        emit(features_out, [&](std::ostream& os) { write_feature_csv(os, rows); });
      }
      std::cout << "digest " << hex64(r.digest()) << '\n'
                << "all joined at " << (r.all_joined_at == kNever ? std::string("never") : std::to_string(r.all_joined_at))
                << " ms\n"
                << "data originated " << r.stats.data_originated << ", delivered " << r.stats.data_delivered
                << ", dropped " << r.stats.data_dropped << ", in flight " << r.stats.data_in_flight << '\n'
                << "tx: DIO " << r.stats.dio_tx << ", DIS " << r.stats.dis_tx << ", DAO " << r.stats.dao_tx << ", DATA "
                << r.stats.data_tx << '\n';
      for (const auto& [reason, n] : r.stats.drops_by_reason) std::cout << "  drop " << reason << ' ' << n << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
