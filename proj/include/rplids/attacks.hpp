// The seven attacker behaviours. Each is a pure rule over the attacker's own
// state or over a transit packet; the event loop consults AttackerModel at
// its decision points, so a benign node and an attacker share one engine.
#pragma once

#include <optional>
#include <vector>

#include "rplids/rng.hpp"
#include "rplids/rpl.hpp"
#include "rplids/types.hpp"

namespace rplids {

struct AttackConfig {
  AttackKind kind = AttackKind::BH;
  NodeId attacker = kNoNode;
  Millis start_time = 600000;
  double sf_drop_prob = 0.5;
  Millis hf_interval = 2000;
  int iv_reincrement_fires = 10;
  Rank dr_advertised_rank = kRootRank + 1;

  bool active(Millis now) const { return now >= start_time; }
};

/// Throws std::invalid_argument for an attacker outside [1, node_count) or
/// out-of-range parameters.
void validate(const AttackConfig& cfg, std::size_t node_count);

/// DR: a joined attacker always claims a rank just above the root.
std::optional<Rank> dr_advertise(const NodeState& s, Rank advertised = kRootRank + 1);

/// IV: one above the version the network currently runs.
inline VersionNumber iv_advertise(VersionNumber network_version) { return network_version + 1; }

enum class ForwardVerdict : std::uint8_t { forward, drop };

inline bool is_transit(const DataPacket& pkt, NodeId self) { return pkt.src != self && pkt.dst != self; }

/// BH: every transit data packet is dropped.
ForwardVerdict bh_forward(const DataPacket& pkt, NodeId self);

/// SF: transit data packets are dropped with probability p.
ForwardVerdict sf_forward(const DataPacket& pkt, NodeId self, Rng& rng, double p);

/// WP: the eligible candidate giving the largest own rank; ties to the lowest id.
std::optional<NodeId> wp_select_parent(const NodeState& s);

/// DI: transit packets leave the attacker with the forwarding-error flag set.
DataPacket di_mark(DataPacket pkt, NodeId self);

/// HF: times of the attacker's DIS broadcasts in [start_time, horizon).
std::vector<Millis> hf_schedule(const AttackConfig& cfg, Millis horizon);

/// Attack hooks consulted by the event loop for the attacker node.
class AttackerModel {
 public:
  explicit AttackerModel(AttackConfig cfg) : cfg_(cfg) {}

  const AttackConfig& config() const { return cfg_; }
  bool is(NodeId n) const { return n == cfg_.attacker; }
  bool active(NodeId n, Millis now) const { return is(n) && cfg_.active(now); }

  /// Rank written into an outgoing DIO.
  Rank advertised_rank(const NodeState& s, Millis now) const;
  ParentPolicy parent_policy(NodeId n, Millis now) const;
  bool rewrites_dio() const;

  struct TransitResult {
    ForwardVerdict verdict = ForwardVerdict::forward;
    std::string_view reason;
  };
  /// Applied to transit data at the attacker before the normal forwarding
  /// decision. May set the packet's F flag.
  TransitResult on_transit(DataPacket& pkt, NodeId self, Millis now, Rng& rng) const;

  /// Counts a trickle fire point at the attacker; true when the IV attacker
  /// should bump the version again.
  bool count_fire_for_reincrement(Millis now);
  void reset_fire_count() { fires_since_bump_ = 0; }

 private:
  AttackConfig cfg_;
  int fires_since_bump_ = 0;
};

}  // namespace rplids
