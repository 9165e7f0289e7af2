// The three IDS placements built on top of per-node feature windows:
// a single node with local features (CIDwL), a central node fed every ID
// node's features (CIDwG), and per-node detectors whose alarms are voted on
// (DCID). Also the message-count cost model.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rplids/classifier.hpp"
#include "rplids/monitor.hpp"
#include "rplids/topology.hpp"

namespace rplids {

enum class ArchitectureKind : std::uint8_t { CIDwL, CIDwG, DCID };

std::string_view to_string(ArchitectureKind a);
ArchitectureKind parse_architecture(std::string_view s);

struct VotingScheme {
  enum class Kind : std::uint8_t { minority, majority };
  Kind kind = Kind::minority;
  /// Percentage threshold, majority only.
  int r = 0;

  static VotingScheme minority() { return {Kind::minority, 0}; }
  /// Throws std::invalid_argument unless 1 <= r <= 100.
  static VotingScheme majority(int r);

  bool operator==(const VotingScheme&) const = default;
};

/// "minority" or "majority50" etc.
std::string to_string(const VotingScheme& v);
/// Accepts "minority", "majority50", "majority(50)" and a bare "50".
VotingScheme parse_scheme(std::string_view s);
/// minority, then majority 50, 60, 70, 80.
const std::vector<VotingScheme>& standard_schemes();

/// Labeled windows of one benign/attack run pair, indexed by node.
struct LabeledRuns {
  NodeId attacker = kNoNode;
  std::vector<std::vector<FeatureWindow>> nodes;
};

/// Labels and pools the windows of a benign run and an attack run.
LabeledRuns make_labeled_runs(const std::vector<std::vector<FeatureWindow>>& benign,
                              const std::vector<std::vector<FeatureWindow>>& attack, NodeId attacker,
                              Millis attack_start, const WindowSpec& spec = {});

/// One row per labeled window of the ID node; rows are grouped by window
/// index so a window's benign and attack versions share a fold.
Dataset cidwl_dataset(NodeId id_node, const LabeledRuns& runs);

/// Per window, the ID nodes' vectors concatenated in ascending id order.
Dataset cidwg_dataset(std::vector<NodeId> id_nodes, const LabeledRuns& runs);

/// Throws std::invalid_argument on an empty vector.
bool dcid_decide(const std::vector<bool>& local_alarms, const VotingScheme& scheme);

/// Votes per row over per-node predictions (all the same length).
std::vector<Label> dcid_vote(const std::vector<std::vector<Label>>& local_predictions, const VotingScheme& scheme);

struct CvSettings {
  int k_folds = 10;
  std::uint64_t seed = 1;
  ForestParams forest;
};

/// Held-out local predictions of one ID node. All nodes of a run pair share
/// the fold split, and each node's forests get their own seed, so these are
/// exactly the predictions CIDwL scores and DCID votes on.
std::vector<Label> local_predictions(NodeId id_node, const LabeledRuns& runs, const CvSettings& cv);

Metrics cidwl_evaluate(NodeId id_node, const LabeledRuns& runs, const CvSettings& cv);
Metrics cidwg_evaluate(const std::vector<NodeId>& id_nodes, const LabeledRuns& runs, const CvSettings& cv);
Metrics dcid_evaluate(const std::vector<NodeId>& id_nodes, const LabeledRuns& runs, const VotingScheme& scheme,
                      const CvSettings& cv);

/// Labels of a node's rows in dataset order.
std::vector<Label> truth_labels(const LabeledRuns& runs);

struct CostParams {
  int feature_bytes = 4;
  int header_bytes = 8;
  int alarm_bytes = 1;
  NodeId central = kRootId;
  WindowSpec window;
};

struct CostReport {
  std::uint64_t extra_messages = 0;
  std::uint64_t extra_bytes = 0;
  bool operator==(const CostReport&) const = default;
};

/// Link-level transmissions needed to bring per-window reports to the
/// central node: one message per window per non-central ID node, counted
/// once per hop.
CostReport communication_cost(ArchitectureKind arch, const std::vector<NodeId>& id_nodes, Millis horizon,
                              const GridTopology& topo, const CostParams& params = {});

}  // namespace rplids
