#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "rplids/architectures.hpp"
#include "rplids/sim.hpp"

using namespace rplids;

namespace {

std::vector<std::vector<FeatureWindow>> windows_of(const RunResult& r) {
  std::vector<std::vector<FeatureWindow>> out;
  for (const auto& m : r.monitors) out.push_back(m.windows());
  return out;
}

// BH at node 13 over one hour, attack from 600 s.
const LabeledRuns& bh_runs() {
  static const LabeledRuns runs = [] {
    const auto topo = build_grid(6, 5, 20, 25);
    SimConfig c;
    c.keep_events = false;
    const auto benign = simulate(topo, c);
    AttackConfig a;
    a.kind = AttackKind::BH;
    a.attacker = 13;
    c.attack = a;
    const auto attack = simulate(topo, c);
    return make_labeled_runs(windows_of(benign), windows_of(attack), 13, a.start_time);
  }();
  return runs;
}

// Synthetic runs: nodes listed in `clear` see the label in every feature,
// the rest see noise.
LabeledRuns synthetic(std::size_t nodes, const std::vector<NodeId>& clear, std::uint64_t seed) {
  LabeledRuns runs;
  runs.attacker = static_cast<NodeId>(nodes - 1);
  runs.nodes.resize(nodes);
  Rng rng(seed);
  for (int lbl = 0; lbl < 2; ++lbl)
    for (std::size_t w = 10; w < 60; ++w)
      for (NodeId n = 0; n < nodes; ++n) {
        FeatureWindow fw;
        fw.node = n;
        fw.window_index = w;
        fw.label = lbl ? Label::malicious : Label::benign;
        const bool sees = std::find(clear.begin(), clear.end(), n) != clear.end();
        for (auto& f : fw.features) f = sees ? lbl + 0.1 * rng.uniform() : rng.uniform();
        runs.nodes[n].push_back(fw);
      }
  return runs;
}

// Threshold oracle written independently of the implementation.
bool majority_oracle(int raised, int k, int r) { return raised >= static_cast<int>(std::ceil(r * k / 100.0 - 1e-12)); }

}  // namespace

TEST_CASE("voting examples") {
  const auto min = VotingScheme::minority();
  CHECK(dcid_decide({true, false, false, false}, min));
  CHECK(dcid_decide({true, true, false, false}, VotingScheme::majority(50)));
  CHECK(!dcid_decide({true, true, false, false}, VotingScheme::majority(60)));
  for (const auto& s : standard_schemes()) CHECK(!dcid_decide({false, false}, s));
  std::vector<bool> seven(9, false), eight(9, false);
  for (int i = 0; i < 7; ++i) seven[i] = true;
  for (int i = 0; i < 8; ++i) eight[i] = true;
  CHECK(!dcid_decide(seven, VotingScheme::majority(80)));
  CHECK(dcid_decide(eight, VotingScheme::majority(80)));
  CHECK_THROWS_AS(dcid_decide({}, min), std::invalid_argument);
}

TEST_CASE("voting properties over random alarm vectors") {
  Rng rng(2024);
  int failures = 0;
  for (int c = 0; c < 10000; ++c) {
    const int k = 2 + static_cast<int>(rng.below(8));
    std::vector<bool> alarms(k);
    int raised = 0;
    for (int i = 0; i < k; ++i) raised += alarms[i] = rng.bernoulli(0.5);
    const bool any = raised > 0;
    if (dcid_decide(alarms, VotingScheme::minority()) != any) ++failures;
    bool prev = true;
    for (int r = 1; r <= 100; ++r) {
      const bool fires = dcid_decide(alarms, VotingScheme::majority(r));
      if (fires != majority_oracle(raised, k, r)) ++failures;
      if (fires && !prev) ++failures;  // firing at r implies firing below r
      if (fires && !any) ++failures;
      prev = fires;
    }
    if (!dcid_decide(std::vector<bool>(k, true), VotingScheme::majority(100))) ++failures;
    if (dcid_decide(std::vector<bool>(k, false), VotingScheme::majority(1))) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("scheme names") {
  CHECK(to_string(VotingScheme::minority()) == "minority");
  CHECK(to_string(VotingScheme::majority(70)) == "majority70");
  CHECK(parse_scheme("majority(60)") == VotingScheme::majority(60));
  CHECK(parse_scheme("80") == VotingScheme::majority(80));
  CHECK(parse_scheme("minority") == VotingScheme::minority());
  CHECK_THROWS_AS(parse_scheme("plurality"), std::invalid_argument);
  CHECK_THROWS_AS(VotingScheme::majority(0), std::invalid_argument);
  CHECK(standard_schemes().size() == 5);
  CHECK(parse_architecture("CIDwG") == ArchitectureKind::CIDwG);
  CHECK_THROWS(parse_architecture("CID"));
}

TEST_CASE("CIDwL dataset from a one hour pair") {
  const auto& runs = bh_runs();
  const auto ds = cidwl_dataset(0, runs);
  CHECK(ds.size() == 100);
  CHECK(ds.dim == 35);
  const auto counts = ds.class_counts();
  CHECK(counts.at(Label::benign) == 50);
  CHECK(counts.at(Label::malicious) == 50);
  CHECK_THROWS_AS(cidwl_dataset(13, runs), std::invalid_argument);
  CHECK_THROWS_AS(cidwl_dataset(30, runs), std::invalid_argument);
}

TEST_CASE("empty attack run surfaces as a single-class error") {
  LabeledRuns runs = synthetic(4, {0}, 1);
  for (auto& node : runs.nodes)
    node.erase(std::remove_if(node.begin(), node.end(), [](const auto& w) { return w.label == Label::malicious; }),
               node.end());
  CHECK_THROWS_AS(cidwl_evaluate(0, runs, {}), std::invalid_argument);
}

TEST_CASE("CIDwG rows concatenate in id order") {
  const auto& runs = bh_runs();
  CHECK(cidwg_dataset({0, 1}, runs).dim == 70);
  const auto nine = cidwg_dataset({0, 1, 10, 15, 8, 25, 14, 23, 24}, runs);
  CHECK(nine.dim == 315);
  CHECK(nine.size() == 100);
  const auto a = cidwg_dataset({7, 1, 2}, runs), b = cidwg_dataset({2, 7, 1}, runs);
  CHECK(a.x == b.x);
  CHECK(a.x[5][35] == runs.nodes[2][5].features[0]);
  CHECK_THROWS_AS(cidwg_dataset({0}, runs), std::invalid_argument);
  CHECK_THROWS_AS(cidwg_dataset({0, 13}, runs), std::invalid_argument);
  CHECK_THROWS_AS(cidwg_dataset({0, 0, 1}, runs), std::invalid_argument);

  LabeledRuns broken = runs;
  broken.nodes[1].pop_back();
  CHECK_THROWS_AS(cidwg_dataset({0, 1}, broken), std::invalid_argument);
}

TEST_CASE("DCID vote arithmetic") {
  CvSettings cv;
  cv.forest.n_trees = 15;
  // Every local detector perfect: perfect under every scheme.
  const auto clear = synthetic(5, {0, 1, 2, 3}, 3);
  for (const auto& s : standard_schemes()) CHECK(dcid_evaluate({0, 1, 2}, clear, s, cv).accuracy == 1.0);

  // One noise node among two perfect ones: majority(50) of 3 still perfect.
  const auto mixed = synthetic(5, {0, 1}, 4);
  CHECK(dcid_evaluate({0, 1, 2}, mixed, VotingScheme::majority(50), cv).accuracy == 1.0);

  const std::vector<std::vector<Label>> local = {{Label::malicious, Label::benign}, {Label::benign, Label::benign}};
  CHECK(dcid_vote(local, VotingScheme::minority()) == std::vector<Label>{Label::malicious, Label::benign});
  CHECK(dcid_vote(local, VotingScheme::majority(60)) == std::vector<Label>{Label::benign, Label::benign});
  CHECK_THROWS(dcid_vote({{Label::benign}, {}}, VotingScheme::minority()));
}

TEST_CASE("CIDwL and DCID share local predictions") {
  CvSettings cv;
  cv.forest.n_trees = 20;
  const auto& runs = bh_runs();
  const auto p7 = local_predictions(7, runs, cv);
  CHECK(score(truth_labels(runs), p7).accuracy == cidwl_evaluate(7, runs, cv).accuracy);
  const auto p1 = local_predictions(1, runs, cv);
  const auto p0 = local_predictions(0, runs, cv);
  const auto voted = score(truth_labels(runs), dcid_vote({p0, p1, p7}, VotingScheme::majority(60)));
  CHECK(voted.confusion == dcid_evaluate({7, 0, 1}, runs, VotingScheme::majority(60), cv).confusion);
}

TEST_CASE("BH is obvious next to the attacker and invisible far away") {
  CvSettings cv;
  cv.forest.n_trees = 30;
  const auto& runs = bh_runs();
  CHECK(cidwl_evaluate(7, runs, cv).accuracy >= 0.95);   // attacker's parent
  CHECK(cidwl_evaluate(5, runs, cv).accuracy <= 0.65);   // other branch
}

TEST_CASE("communication cost") {
  const auto topo = build_grid(6, 5, 20, 25);
  CostParams p;
  CHECK(communication_cost(ArchitectureKind::CIDwL, {0}, 3600000, topo, p) == CostReport{});
  CHECK(communication_cost(ArchitectureKind::CIDwL, {29}, 3600000, topo, p) == CostReport{});

  // Node 3 is three hops from the root; 6000 s is 100 windows.
  const auto g = communication_cost(ArchitectureKind::CIDwG, {3}, 6000000, topo, p);
  CHECK(g.extra_messages == 300);
  CHECK(g.extra_bytes == 300 * 148);
  const auto d = communication_cost(ArchitectureKind::DCID, {3}, 6000000, topo, p);
  CHECK(d.extra_messages == 300);
  CHECK(d.extra_bytes == 300 * 9);
  // The central node itself sends nothing.
  CHECK(communication_cost(ArchitectureKind::CIDwG, {0, 1}, 3600000, topo, p).extra_messages == 60);
}

TEST_CASE("DCID is always cheaper than CIDwG") {
  const auto topo = build_grid(6, 5, 20, 25);
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    std::vector<NodeId> ids;
    for (NodeId n = 0; n < 30; ++n)
      if (rng.bernoulli(0.3)) ids.push_back(n);
    if (ids.empty() || (ids.size() == 1 && ids[0] == 0)) continue;
    const auto g = communication_cost(ArchitectureKind::CIDwG, ids, 3600000, topo);
    const auto d = communication_cost(ArchitectureKind::DCID, ids, 3600000, topo);
    CHECK(d.extra_bytes < g.extra_bytes);
    CHECK(d.extra_messages == g.extra_messages);
  }
}
