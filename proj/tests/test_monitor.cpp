#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "rplids/sim.hpp"

using namespace rplids;

namespace {

Event tx(Millis t, NodeId n, MsgKind m, NodeId peer = kBroadcast) {
  Event e;
  e.time = t;
  e.kind = EventKind::msg_tx;
  e.subject = n;
  e.msg = m;
  e.peer = peer;
  return e;
}

Event rx(Millis t, NodeId n, MsgKind m, NodeId from) {
  Event e;
  e.time = t;
  e.kind = EventKind::msg_delivery;
  e.subject = n;
  e.msg = m;
  e.peer = from;
  return e;
}

double feat(const FeatureWindow& w, std::string_view name) { return w.features[feature_index(name)]; }

const RunResult& benign_hour() {
  static const RunResult r = [] {
    SimConfig c;
    c.horizon = 3600000;
    return simulate(build_grid(6, 5, 20, 25), c);
  }();
  return r;
}

}  // namespace

TEST_CASE("catalog has 35 distinct names") {
  const auto& names = feature_names();
  CHECK(names.size() == 35);
  std::set<std::string_view> uniq(names.begin(), names.end());
  CHECK(uniq.size() == 35);
  CHECK(feature_index("version_max_seen") < 35);
  CHECK_THROWS_AS(feature_index("nope"), std::out_of_range);
  std::ostringstream os;
  write_feature_manifest(os);
  const auto m = os.str();
  CHECK(std::count(m.begin(), m.end(), '\n') == 35);
  CHECK(m.rfind("f01,dio_tx\n", 0) == 0);
}

TEST_CASE("counters follow event kinds") {
  MonitorLog log(4, false);
  log.observe(rx(100, 4, MsgKind::dio, 3));
  log.observe(rx(200, 4, MsgKind::dio, 5));
  log.observe(tx(300, 4, MsgKind::dis));
  Event pc;
  pc.time = 400;
  pc.kind = EventKind::parent_change;
  pc.subject = 4;
  pc.old_value = -1;
  pc.new_value = 3;
  pc.etx = 1.0;
  log.observe(pc);
  // Someone else's traffic is not this node's business.
  log.observe(rx(500, 9, MsgKind::dio, 3));
  log.observe(tx(600, 3, MsgKind::data, 9));
  log.finish(60000);
  REQUIRE(log.window_count() == 1);
  const auto& w = log.extract_window(0);
  CHECK(feat(w, "dio_rx") == 2);
  CHECK(feat(w, "dis_tx") == 1);
  CHECK(feat(w, "parent_changes") == 1);
  CHECK(feat(w, "distinct_neighbors") == 2);
  CHECK(feat(w, "data_tx") == 0);
  CHECK(feat(w, "ctrl_interarrival_mean") == doctest::Approx(0.1));
}

TEST_CASE("idle window keeps the last gauges") {
  MonitorLog log(4, false);
  Event rc;
  rc.time = 1000;
  rc.kind = EventKind::rank_change;
  rc.subject = 4;
  rc.old_value = kInfiniteRank;
  rc.new_value = 768;
  log.observe(rc);
  Event vc;
  vc.time = 1000;
  vc.kind = EventKind::version_change;
  vc.subject = 4;
  vc.new_value = 1;
  log.observe(vc);
  log.finish(180000);
  REQUIRE(log.window_count() == 3);
  const auto& idle = log.extract_window(2);
  CHECK(feat(idle, "rank_current") == 768);
  CHECK(feat(idle, "rank_mean") == 768);
  CHECK(feat(idle, "version_current") == 1);
  CHECK(feat(idle, "version_max_seen") == 1);
  for (auto name : {"dio_tx", "dio_rx", "dis_tx", "dis_rx", "dao_tx", "dao_rx", "data_tx", "data_rx", "data_fwd",
                    "data_dropped", "data_bounced", "parent_changes", "trickle_resets", "rank_change_count",
                    "version_change_count", "duplicate_dao", "f_flag_rx", "dis_dio_responses"})
    CHECK(feat(idle, name) == 0);
  CHECK_THROWS_AS(log.extract_window(3), std::out_of_range);
}

TEST_CASE("partial trailing window is discarded") {
  MonitorLog log(1, false);
  log.finish(150000);
  CHECK(log.window_count() == 2);
  WindowSpec spec;
  CHECK(spec.complete_windows(18000000) == 300);
  CHECK(spec.complete_windows(3600000) == 60);
  CHECK_THROWS(WindowSpec{60000, 30000}.validate());
  CHECK_THROWS(WindowSpec{0, 0}.validate());
}

TEST_CASE("one hour gives 60 windows at every node") {
  const auto& r = benign_hour();
  REQUIRE(r.monitors.size() == 30);
  for (const auto& m : r.monitors) {
    CHECK(m.window_count() == 60);
    for (std::size_t i = 0; i < m.window_count(); ++i) {
      CHECK(m.extract_window(i).window_index == i);
      for (double v : m.extract_window(i).features) CHECK(v >= 0);
    }
  }
}

TEST_CASE("data_tx per window matches a count over the trace") {
  const auto& r = benign_hour();
  for (NodeId n : {1u, 13u, 29u}) {
    std::vector<double> oracle(60, 0.0), fwd_oracle(60, 0.0);
    for (const auto& e : r.trace.events())
      if (e.kind == EventKind::msg_tx && e.msg == MsgKind::data && e.subject == n && e.time < 3600000)
        (e.forwarded ? fwd_oracle : oracle)[static_cast<std::size_t>(e.time / 60000)] += 1;
    double fwd_sum = 0, fwd_total = 0;
    for (std::size_t w = 0; w < 60; ++w) {
      CHECK(feat(r.monitors[n].extract_window(w), "data_tx") == oracle[w]);
      fwd_sum += feat(r.monitors[n].extract_window(w), "data_fwd");
      fwd_total += fwd_oracle[w];
    }
    CHECK(fwd_sum == fwd_total);
  }
  // A joined sensor originates four packets per minute.
  CHECK(feat(r.monitors[29].extract_window(30), "data_tx") == 4);
}

TEST_CASE("replay from the trace equals the online monitors") {
  const auto topo = build_grid(6, 5, 20, 25);
  for (AttackKind k : {AttackKind::IV, AttackKind::DI, AttackKind::HF}) {
    SimConfig c;
    c.horizon = 1800000;
    AttackConfig a;
    a.kind = k;
    a.attacker = 13;
    c.attack = a;
    const auto r = simulate(topo, c);
    const auto replay = replay_monitors(r.trace.events(), topo.size(), c.horizon);
    REQUIRE(replay.size() == r.monitors.size());
    for (std::size_t n = 0; n < replay.size(); ++n) CHECK(replay[n].windows() == r.monitors[n].windows());
  }
}

TEST_CASE("max version seen never decreases at benign nodes") {
  const auto& r = benign_hour();
  for (const auto& m : r.monitors) {
    double prev = 0;
    for (const auto& w : m.windows()) {
      CHECK(feat(w, "version_max_seen") >= prev);
      prev = feat(w, "version_max_seen");
    }
  }
}

TEST_CASE("label_windows") {
  std::vector<FeatureWindow> ws(60);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    ws[i].node = 3;
    ws[i].window_index = i;
  }
  const auto benign = label_windows(RunKind::benign, 600000, ws);
  const auto attack = label_windows(RunKind::attack, 600000, ws);
  CHECK(benign.size() == 50);
  CHECK(attack.size() == 50);
  for (const auto& w : benign) CHECK(w.label == Label::benign);
  for (const auto& w : attack) CHECK(w.label == Label::malicious);
  // Window at 900 s kept and malicious; window at 300 s discarded.
  CHECK(std::any_of(attack.begin(), attack.end(), [](const auto& w) { return w.window_index == 15; }));
  CHECK(std::none_of(attack.begin(), attack.end(), [](const auto& w) { return w.window_index == 5; }));
  CHECK(label_windows(RunKind::benign, 0, ws).size() == 60);
}

TEST_CASE("feature CSV round-trips exactly") {
  const auto& r = benign_hour();
  std::vector<FeatureWindow> rows;
  for (NodeId n : {0u, 7u}) rows.insert(rows.end(), r.monitors[n].windows().begin(), r.monitors[n].windows().end());
  rows[3].label = Label::malicious;
  std::stringstream ss;
  write_feature_csv(ss, rows);
  std::string header;
  std::getline(std::istringstream(ss.str()), header);
  CHECK(header.rfind("node,window,label,f01,", 0) == 0);
  REQUIRE(header.size() >= 4);
  CHECK(header.substr(header.size() - 4) == ",f35");
  CHECK(read_feature_csv(ss) == rows);
  std::istringstream bad("node,window,label\n1,2\n");
  CHECK_THROWS_AS(read_feature_csv(bad), std::invalid_argument);
}
