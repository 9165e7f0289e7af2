// Per-node RPL state machine: rank computation under MRHOF-ETX, parent
// selection, trickle timer arithmetic, and the DIO/DIS/DAO/data handlers.
//
// Handlers mutate a NodeState in place and return a description of the
// side effects (transmissions, timer resets) for the event loop to execute.
#pragma once

#include <map>
#include <optional>
#include <vector>

#include "rplids/rng.hpp"
#include "rplids/types.hpp"

namespace rplids {

struct RplParams {
  Millis trickle_imin_ms = 4000;
  int trickle_doublings = 8;
  int trickle_k = 10;
  Rank parent_hysteresis = 192;
  Millis dao_period_ms = 60000;
  /// Downward routes not refreshed by a DAO within this span are ignored.
  Millis route_lifetime_ms = 180000;
  /// Unjoined nodes solicit DIOs with this period.
  Millis dis_period_ms = 60000;
  double etx_alpha = 0.1;
};

// ---------------------------------------------------------------- messages

struct DioPayload {
  VersionNumber version = 0;
  Rank rank = kInfiniteRank;
};

struct DaoPayload {
  NodeId target = kNoNode;
  bool no_path = false;
};

struct DataPacket {
  NodeId src = kNoNode;
  NodeId dst = kRootId;
  std::uint32_t seq = 0;
  std::vector<NodeId> hop_path;
  bool forwarding_error_flag = false;

  bool operator==(const DataPacket&) const = default;
};

enum class MsgKind : std::uint8_t { none, dio, dis, dao, data };

struct ControlMessage {
  MsgKind kind = MsgKind::none;
  NodeId sender = kNoNode;
  DioPayload dio;
  DaoPayload dao;
};

// ---------------------------------------------------------------- trickle

struct TrickleTimer {
  Millis i_min = 4000;
  int doublings = 8;
  Millis i_current = 4000;
  int redundancy_k = 10;
  int counter_c = 0;
  Millis interval_start = 0;
  Millis next_fire = 0;
  bool running = false;

  Millis i_max() const { return i_min << doublings; }
};

TrickleTimer make_trickle(const RplParams& p);

/// Starts a fresh interval at `now` with a fire point drawn from [I/2, I).
void trickle_begin_interval(TrickleTimer& t, Millis now, Rng& rng);

/// Sets I back to i_min and begins a new interval. Returns false (and leaves
/// the timer untouched) when the timer already runs at i_min, following the
/// usual trickle rule.
bool trickle_reset(TrickleTimer& t, Millis now, Rng& rng);

inline bool trickle_should_fire(const TrickleTimer& t) { return t.counter_c < t.redundancy_k; }

/// Interval expiry: doubles I up to the cap and clears the counter.
void trickle_double(TrickleTimer& t);

struct TrickleAdvance {
  TrickleTimer timer;
  bool fire = false;
};

/// One whole interval: accumulate consistent DIOs heard, decide whether the
/// DIO goes out, then double.
TrickleAdvance trickle_advance(TrickleTimer t, int consistent_heard);

// ---------------------------------------------------------------- node state

struct RouteEntry {
  NodeId next_hop = kNoNode;
  Millis refreshed_at = 0;
};

struct NodeState {
  NodeId id = kNoNode;
  bool is_root = false;
  Rank rank = kInfiniteRank;
  VersionNumber version = 0;
  std::map<NodeId, Rank> parent_candidates;
  std::optional<NodeId> preferred_parent;
  std::map<NodeId, double> etx_estimates;
  std::map<NodeId, RouteEntry> routing_table;
  TrickleTimer trickle;

  bool joined() const { return rank < kInfiniteRank; }
  double etx_to(NodeId n) const;
};

NodeState make_node(NodeId id, const RplParams& p);
NodeState make_root(const RplParams& p, VersionNumber version = 1);

/// parent_rank + max(round(etx * 256), 256), saturating at kInfiniteRank.
Rank compute_rank(Rank parent_rank, double link_etx);

/// Candidates a node may legally pick: finite rank and not part of its own
/// sub-DODAG (a destination in its routing table).
std::vector<NodeId> eligible_parents(const NodeState& s);

/// MRHOF choice with hysteresis against the current preferred parent; ties
/// go to the lowest id.
std::optional<NodeId> select_parent(const NodeState& s, Rank hysteresis = 192);

/// Drops routes older than the configured lifetime.
void expire_routes(NodeState& s, Millis now, Millis lifetime);

enum class ParentPolicy : std::uint8_t { best, worst };

struct ParentUpdate {
  bool parent_changed = false;
  std::optional<NodeId> old_parent;
  bool rank_changed = false;
  Rank old_rank = kInfiniteRank;
  /// Rank moved by at least one MinHopRankIncrease.
  bool needs_trickle_reset = false;
};

/// Re-runs parent selection and recomputes the node's rank.
ParentUpdate update_parent(NodeState& s, const RplParams& p, ParentPolicy policy);

struct DioOutcome {
  bool ignored = false;
  bool global_repair = false;
  bool version_changed = false;
  VersionNumber old_version = 0;
  ParentUpdate parent;
  bool trickle_reset = false;
  bool consistent = false;
};

DioOutcome handle_dio(NodeState& s, NodeId sender, const DioPayload& dio, double link_etx, const RplParams& p,
                      ParentPolicy policy = ParentPolicy::best);

struct DisOutcome {
  bool send_dio = false;
  bool trickle_reset = false;
};

DisOutcome handle_dis(const NodeState& s);

struct DaoOutcome {
  bool accepted = false;
  bool duplicate = false;
  /// Upstream propagation target when the node is not the root.
  std::optional<NodeId> forward_to;
};

DaoOutcome handle_dao(NodeState& s, NodeId sender, const DaoPayload& dao, Millis now);

enum class ForwardAction : std::uint8_t { deliver, forward, bounce, drop };

struct ForwardDecision {
  ForwardAction action = ForwardAction::drop;
  NodeId next_hop = kNoNode;
  bool upward = true;
  std::string_view drop_reason;
};

/// Forwarding decision for a data packet at node `s`, received from `from`
/// (kNoNode when the node originates it). A packet carrying the forwarding
/// error flag is bounced and every route through `from` is purged.
ForwardDecision route_data(NodeState& s, const DataPacket& pkt, NodeId from, int hop_limit = 64);

}  // namespace rplids
