// Scenario generation, batch execution with a simulation cache, result
// files, and the summary tables and heatmaps built from them.
#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rplids/architectures.hpp"
#include "rplids/config.hpp"

namespace rplids {

inline const std::vector<NodeId> kAttackerPool = {5, 2, 11, 20, 13, 22, 19, 28, 29};
inline const std::vector<NodeId> kIdPool = {0, 1, 10, 15, 8, 25, 14, 23, 24};

struct Scenario {
  std::string id;
  int rq = 1;
  AttackConfig attack;
  ArchitectureKind arch = ArchitectureKind::CIDwL;
  /// Ascending.
  std::vector<NodeId> id_nodes;
  std::optional<VotingScheme> scheme;

  /// Throws std::invalid_argument when the architecture, ID set, scheme and
  /// attacker are inconsistent.
  void validate(std::size_t node_count) const;
};

/// Stable text form of everything except the id.
std::string canonical_form(const Scenario& s);
/// 16 hex digits of a hash over canonical_form.
std::string make_scenario_id(const Scenario& s);

struct ExperimentPlan {
  int rq = 1;
  std::vector<NodeId> attacker_pool = kAttackerPool;
  /// RQ1 uses every node as a candidate ID node.
  std::vector<NodeId> id_pool;
  std::vector<AttackKind> attacks{std::begin(kAllAttacks), std::end(kAllAttacks)};
  /// ID-set sizes for RQ2/RQ3 (default 2..9).
  std::vector<std::size_t> subset_sizes = {2, 3, 4, 5, 6, 7, 8, 9};
  AttackConfig attack_defaults;

  /// Pools as used for the given research question on a node_count grid.
  static ExperimentPlan standard(int rq, std::size_t node_count = 30);
};

std::vector<Scenario> gen_rq1(const ExperimentPlan& plan);
std::vector<Scenario> gen_rq2(const ExperimentPlan& plan);
std::vector<Scenario> gen_rq3(const ExperimentPlan& plan, const VotingScheme& scheme);

/// Subsets of `pool` with the given size, in lexicographic order of pool positions.
std::vector<std::vector<NodeId>> subsets_of_size(const std::vector<NodeId>& pool, std::size_t k);

/// CSV: scenario_id,rq,attack,attacker,start_ms,sf_drop_prob,hf_interval_ms,arch,scheme,id_nodes
void write_plan(std::ostream& os, const std::vector<Scenario>& scenarios);
/// Throws std::invalid_argument on malformed lines or a scenario id that
/// does not match its content.
std::vector<Scenario> read_plan(std::istream& is);

struct ResultRow {
  std::string scenario_id;
  int rq = 0;
  AttackKind attack = AttackKind::BH;
  NodeId attacker = kNoNode;
  ArchitectureKind arch = ArchitectureKind::CIDwL;
  std::string scheme;
  std::vector<NodeId> id_nodes;
  double accuracy = 0;
  double tpr = 0;
  double fpr = 0;
  std::uint64_t extra_msgs = 0;
  std::uint64_t extra_bytes = 0;
  std::uint64_t seed = 1;
  Millis horizon_s = 3600;
  /// Only present with more than one replicate.
  std::optional<double> accuracy_sd, tpr_sd, fpr_sd;
  int replicates = 1;
};

std::string results_header(bool with_sd);
std::string format_result(const ResultRow& r);
std::vector<ResultRow> read_results(std::istream& is);

/// Persistent store of per-node feature windows for simulated runs, keyed
/// by everything that determines the simulated traffic.
class SimulationCache {
 public:
  /// An empty directory disables persistence (runs are still memoised
  /// in-process by the caller).
  explicit SimulationCache(std::string dir);

  struct Entry {
    std::vector<std::vector<FeatureWindow>> windows;
    std::uint64_t digest = 0;
  };

  std::string key(const Config& cfg, std::uint64_t topo_digest, std::uint64_t seed, Millis horizon,
                  const std::optional<AttackConfig>& attack) const;

  /// Loads the entry or simulates it. `simulated` tells which happened;
  /// `note` receives a diagnostic for a corrupted entry.
  Entry get_or_run(const Config& cfg, const GridTopology& topo, std::uint64_t seed, Millis horizon,
                   const std::optional<AttackConfig>& attack, bool* simulated, std::string* note) const;

  const std::string& dir() const { return dir_; }

 private:
  std::optional<Entry> load(const std::string& key, std::size_t node_count, std::string* note) const;
  void store(const std::string& key, const Entry& e) const;

  std::string dir_;
};

struct RunOptions {
  std::uint64_t seed = 1;
  Millis horizon = 3600000;
  int jobs = 1;
  std::string cache_dir;
  /// Results are appended here; rows already present (same scenario, seed
  /// and horizon) are skipped.
  std::string results_path;
  int replicates = 1;
  /// Progress and per-scenario failures.
  std::function<void(const std::string&)> log;
};

struct RunSummary {
  std::size_t rows_written = 0;
  std::size_t rows_skipped = 0;
  std::size_t failures = 0;
  std::size_t simulations = 0;
  std::size_t cache_hits = 0;
};

RunSummary run_plan(const std::vector<Scenario>& scenarios, const Config& cfg, const RunOptions& opt);

/// Evaluates scenarios in memory (no files); rows come back in input order.
/// Failed scenarios are omitted and reported through `log`.
std::vector<ResultRow> evaluate_scenarios(const std::vector<Scenario>& scenarios, const Config& cfg,
                                          std::uint64_t seed, Millis horizon, const SimulationCache& cache,
                                          const std::function<void(const std::string&)>& log = {},
                                          RunSummary* summary = nullptr);

// ---------------------------------------------------------------- reports

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  void write_csv(std::ostream& os) const;
};

/// Root-as-ID accuracy per attack and attacker level, plus max - min.
Table root_accuracy_table(const std::vector<ResultRow>& rows, const GridTopology& topo);
/// Mean accuracy by ID-node count per architecture/scheme and attack.
Table by_count_table(const std::vector<ResultRow>& rows);
/// Best accuracy per attacker averaged over attackers, with the sizes of the
/// winning node sets (smallest set among ties).
Table best_table(const std::vector<ResultRow>& rows);
/// Mean DCID accuracy per attack and voting scheme.
Table voting_table(const std::vector<ResultRow>& rows);
/// Mean TPR/FPR with 2 and with 9 ID nodes.
Table tpr_fpr_table(const std::vector<ResultRow>& rows);

struct Heatmap {
  AttackKind attack = AttackKind::BH;
  /// Rows: ID nodes; columns: attackers; both ordered by level, then id.
  std::vector<NodeId> id_nodes;
  std::vector<NodeId> attackers;
  std::vector<std::vector<double>> cells;
  std::size_t missing = 0;

  void write_csv(std::ostream& os) const;
  /// Shaded text rendering for terminals.
  std::string render() const;
};

/// One matrix per attack present in RQ1 CIDwL rows. ID = attacker cells hold
/// 0.0; cells with no result hold -1.
std::vector<Heatmap> heatmaps(const std::vector<ResultRow>& rows, const GridTopology& topo,
                              const std::vector<NodeId>& attackers = kAttackerPool);

}  // namespace rplids
