// Discrete-event loop over the unit-disk grid: radio delivery, timers,
// application traffic and attack hooks, with a full event trace and one
// monitor per node fed online.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rplids/attacks.hpp"
#include "rplids/event.hpp"
#include "rplids/monitor.hpp"
#include "rplids/rpl.hpp"
#include "rplids/topology.hpp"

namespace rplids {

struct SimConfig {
  RplParams rpl;
  Millis horizon = 3600000;
  Millis link_latency = 10;
  /// Per-receiver loss probability; 0 keeps every run lossless.
  double loss_prob = 0.0;
  Millis data_period = 15000;
  /// Unjoined nodes send their first DIS at a random time in [0, this).
  Millis first_dis_window = 5000;
  int hop_limit = 64;
  std::uint64_t seed = 1;
  WindowSpec window;
  /// Disable to keep only the digest (large batch runs).
  bool keep_events = true;
  std::optional<AttackConfig> attack;

  void validate(const GridTopology& topo) const;
};

/// Random substreams, one per (node, purpose).
enum class RngPurpose : std::uint64_t { trickle = 1, dis = 2, loss = 3, sf = 4 };

struct SimStats {
  std::uint64_t data_originated = 0;
  std::uint64_t data_delivered = 0;
  std::uint64_t data_dropped = 0;
  /// Data packets still travelling on a link when the horizon was reached.
  std::uint64_t data_in_flight = 0;
  std::map<std::string, std::uint64_t> drops_by_reason;
  std::uint64_t dio_tx = 0;
  std::uint64_t dis_tx = 0;
  std::uint64_t dao_tx = 0;
  std::uint64_t data_tx = 0;
  std::uint64_t events_processed = 0;

  /// originated = delivered + dropped + in_flight.
  bool conserved() const { return data_originated == data_delivered + data_dropped + data_in_flight; }
};

struct RunResult {
  EventTrace trace;
  std::vector<MonitorLog> monitors;
  std::vector<NodeState> final_states;
  SimStats stats;
  /// First time every node held a finite rank, or kNever.
  Millis all_joined_at = kNever;

  std::uint64_t digest() const { return trace.digest(); }
};

/// Runs one scenario from t = 0 to cfg.horizon. Throws std::invalid_argument
/// for configurations that reference unknown nodes.
RunResult simulate(const GridTopology& topo, const SimConfig& cfg);

/// Walks preferred-parent pointers; true when every joined node reaches the
/// root with strictly decreasing rank.
bool parent_graph_acyclic(const std::vector<NodeState>& states);

}  // namespace rplids
