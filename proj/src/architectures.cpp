#include "rplids/architectures.hpp"

#include <algorithm>
#include <stdexcept>

#include "rplids/rng.hpp"

namespace rplids {

std::string_view to_string(ArchitectureKind a) {
  switch (a) {
    case ArchitectureKind::CIDwL: return "CIDwL";
    case ArchitectureKind::CIDwG: return "CIDwG";
    case ArchitectureKind::DCID: return "DCID";
  }
  return "?";
}

ArchitectureKind parse_architecture(std::string_view s) {
  for (auto a : {ArchitectureKind::CIDwL, ArchitectureKind::CIDwG, ArchitectureKind::DCID})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown architecture: " + std::string(s));
}

VotingScheme VotingScheme::majority(int r) {
  if (r < 1 || r > 100) throw std::invalid_argument("majority threshold must lie in [1, 100]");
  return {Kind::majority, r};
}

std::string to_string(const VotingScheme& v) {
  return v.kind == VotingScheme::Kind::minority ? "minority" : "majority" + std::to_string(v.r);
}

VotingScheme parse_scheme(std::string_view s) {
  if (s == "minority") return VotingScheme::minority();
  std::string_view num = s;
  if (num.rfind("majority", 0) == 0) num.remove_prefix(8);
  if (!num.empty() && num.front() == '(' && num.back() == ')') num = num.substr(1, num.size() - 2);
  if (num.empty() || num.size() > 3 || !std::all_of(num.begin(), num.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw std::invalid_argument("unknown voting scheme: " + std::string(s));
  return VotingScheme::majority(std::stoi(std::string(num)));
}

const std::vector<VotingScheme>& standard_schemes() {
  static const std::vector<VotingScheme> v = {VotingScheme::minority(), VotingScheme::majority(50),
                                              VotingScheme::majority(60), VotingScheme::majority(70),
                                              VotingScheme::majority(80)};
  return v;
}

LabeledRuns make_labeled_runs(const std::vector<std::vector<FeatureWindow>>& benign,
                              const std::vector<std::vector<FeatureWindow>>& attack, NodeId attacker,
                              Millis attack_start, const WindowSpec& spec) {
  if (benign.size() != attack.size()) throw std::invalid_argument("benign and attack runs cover different node sets");
  LabeledRuns out;
  out.attacker = attacker;
  out.nodes.resize(benign.size());
  for (std::size_t n = 0; n < benign.size(); ++n) {
    out.nodes[n] = label_windows(RunKind::benign, attack_start, benign[n], spec);
    auto mal = label_windows(RunKind::attack, attack_start, attack[n], spec);
    out.nodes[n].insert(out.nodes[n].end(), mal.begin(), mal.end());
  }
  return out;
}

namespace {

void check_node(NodeId id, const LabeledRuns& runs) {
  if (id >= runs.nodes.size()) throw std::invalid_argument("unknown ID node " + std::to_string(id));
  if (id == runs.attacker) throw std::invalid_argument("ID node " + std::to_string(id) + " is the attacker");
}

std::vector<NodeId> canonical_set(std::vector<NodeId> ids, const LabeledRuns& runs, std::size_t min_size) {
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw std::invalid_argument("duplicate ID node");
  if (ids.size() < min_size || ids.size() > 9)
    throw std::invalid_argument("ID node set must have between " + std::to_string(min_size) + " and 9 members, got " +
                                std::to_string(ids.size()));
  for (NodeId id : ids) check_node(id, runs);
  return ids;
}

}  // namespace

Dataset cidwl_dataset(NodeId id_node, const LabeledRuns& runs) {
  check_node(id_node, runs);
  Dataset ds(kFeatureCount);
  for (const auto& w : runs.nodes[id_node])
    ds.add(std::vector<double>(w.features.begin(), w.features.end()), w.label, static_cast<std::int64_t>(w.window_index));
  return ds;
}

Dataset cidwg_dataset(std::vector<NodeId> id_nodes, const LabeledRuns& runs) {
  id_nodes = canonical_set(std::move(id_nodes), runs, 2);
  const auto& ref = runs.nodes[id_nodes.front()];
  for (NodeId id : id_nodes) {
    const auto& rows = runs.nodes[id];
    bool aligned = rows.size() == ref.size();
    for (std::size_t i = 0; aligned && i < rows.size(); ++i)
      aligned = rows[i].window_index == ref[i].window_index && rows[i].label == ref[i].label;
    if (!aligned) throw std::invalid_argument("window rows of node " + std::to_string(id) + " are misaligned");
  }
  Dataset ds(kFeatureCount * id_nodes.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    std::vector<double> row;
    row.reserve(ds.dim);
    for (NodeId id : id_nodes) {
      const auto& f = runs.nodes[id][i].features;
      row.insert(row.end(), f.begin(), f.end());
    }
    ds.add(std::move(row), ref[i].label, static_cast<std::int64_t>(ref[i].window_index));
  }
  return ds;
}

bool dcid_decide(const std::vector<bool>& local_alarms, const VotingScheme& scheme) {
  if (local_alarms.empty()) throw std::invalid_argument("no local alarms to vote on");
  const auto raised = static_cast<long>(std::count(local_alarms.begin(), local_alarms.end(), true));
  if (scheme.kind == VotingScheme::Kind::minority) return raised > 0;
  return raised * 100 >= static_cast<long>(scheme.r) * static_cast<long>(local_alarms.size());
}

std::vector<Label> dcid_vote(const std::vector<std::vector<Label>>& local_predictions, const VotingScheme& scheme) {
  if (local_predictions.empty()) throw std::invalid_argument("no local predictions to vote on");
  const std::size_t rows = local_predictions.front().size();
  for (const auto& p : local_predictions)
    if (p.size() != rows) throw std::invalid_argument("local predictions differ in length");
  std::vector<Label> out(rows);
  std::vector<bool> alarms(local_predictions.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t n = 0; n < local_predictions.size(); ++n) alarms[n] = local_predictions[n][r] == Label::malicious;
    out[r] = dcid_decide(alarms, scheme) ? Label::malicious : Label::benign;
  }
  return out;
}

std::vector<Label> local_predictions(NodeId id_node, const LabeledRuns& runs, const CvSettings& cv) {
  const Dataset ds = cidwl_dataset(id_node, runs);
  // Folds depend only on labels and window groups, identical at every node.
  const auto folds = assign_folds(ds, cv.k_folds, cv.seed);
  return cross_val_predict(ds, folds, cv.k_folds, derive_seed(cv.seed, id_node), cv.forest);
}

std::vector<Label> truth_labels(const LabeledRuns& runs) {
  if (runs.nodes.empty()) return {};
  std::vector<Label> out;
  for (const auto& w : runs.nodes.front()) out.push_back(w.label);
  return out;
}

Metrics cidwl_evaluate(NodeId id_node, const LabeledRuns& runs, const CvSettings& cv) {
  return score(truth_labels(runs), local_predictions(id_node, runs, cv));
}

Metrics cidwg_evaluate(const std::vector<NodeId>& id_nodes, const LabeledRuns& runs, const CvSettings& cv) {
  const Dataset ds = cidwg_dataset(id_nodes, runs);
  const auto folds = assign_folds(ds, cv.k_folds, cv.seed);
  return score(ds.y, cross_val_predict(ds, folds, cv.k_folds, derive_seed(cv.seed, 0x67ULL), cv.forest));
}

Metrics dcid_evaluate(const std::vector<NodeId>& id_nodes, const LabeledRuns& runs, const VotingScheme& scheme,
                      const CvSettings& cv) {
  const auto ids = canonical_set(id_nodes, runs, 2);
  std::vector<std::vector<Label>> local;
  for (NodeId id : ids) local.push_back(local_predictions(id, runs, cv));
  return score(truth_labels(runs), dcid_vote(local, scheme));
}

CostReport communication_cost(ArchitectureKind arch, const std::vector<NodeId>& id_nodes, Millis horizon,
                              const GridTopology& topo, const CostParams& params) {
  CostReport c;
  if (arch == ArchitectureKind::CIDwL) return c;
  const std::uint64_t windows = params.window.complete_windows(horizon);
  const std::uint64_t bytes_per_msg =
      arch == ArchitectureKind::CIDwG ? kFeatureCount * static_cast<std::uint64_t>(params.feature_bytes) + params.header_bytes
                                      : static_cast<std::uint64_t>(params.alarm_bytes + params.header_bytes);
  for (NodeId id : id_nodes) {
    if (!topo.contains(id)) throw std::invalid_argument("unknown ID node " + std::to_string(id));
    if (id == params.central) continue;
    const auto hops = static_cast<std::uint64_t>(topo.hop_distance(id, params.central));
    c.extra_messages += windows * hops;
    c.extra_bytes += windows * hops * bytes_per_msg;
  }
  return c;
}

}  // namespace rplids
