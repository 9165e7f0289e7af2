#include "rplids/rpl.hpp"

#include <algorithm>
#include <cmath>

#include "rplids/attacks.hpp"

namespace rplids {

TrickleTimer make_trickle(const RplParams& p) {
  TrickleTimer t;
  t.i_min = p.trickle_imin_ms;
  t.doublings = p.trickle_doublings;
  t.i_current = p.trickle_imin_ms;
  t.redundancy_k = p.trickle_k;
  return t;
}

void trickle_begin_interval(TrickleTimer& t, Millis now, Rng& rng) {
  const Millis half = t.i_current / 2;
  t.interval_start = now;
  t.counter_c = 0;
  t.next_fire = now + half + static_cast<Millis>(rng.below(static_cast<std::uint64_t>(std::max<Millis>(1, t.i_current - half))));
  t.running = true;
}

bool trickle_reset(TrickleTimer& t, Millis now, Rng& rng) {
  if (t.running && t.i_current == t.i_min) return false;
  t.i_current = t.i_min;
  trickle_begin_interval(t, now, rng);
  return true;
}

void trickle_double(TrickleTimer& t) {
  t.i_current = std::min(t.i_current * 2, t.i_max());
  t.counter_c = 0;
}

TrickleAdvance trickle_advance(TrickleTimer t, int consistent_heard) {
  t.counter_c += consistent_heard;
  const bool fire = trickle_should_fire(t);
  trickle_double(t);
  return {t, fire};
}

double NodeState::etx_to(NodeId n) const {
  auto it = etx_estimates.find(n);
  return it == etx_estimates.end() ? 1.0 : it->second;
}

NodeState make_node(NodeId id, const RplParams& p) {
  NodeState s;
  s.id = id;
  s.trickle = make_trickle(p);
  return s;
}

NodeState make_root(const RplParams& p, VersionNumber version) {
  NodeState s = make_node(kRootId, p);
  s.is_root = true;
  s.rank = kRootRank;
  s.version = version;
  return s;
}

Rank compute_rank(Rank parent_rank, double link_etx) {
  if (parent_rank >= kInfiniteRank) return kInfiniteRank;
  const auto scaled = std::llround(std::max(link_etx, 1.0) * kMinHopRankIncrease);
  const auto increase = std::max<long long>(scaled, kMinHopRankIncrease);
  const auto sum = static_cast<long long>(parent_rank) + increase;
  return static_cast<Rank>(std::min<long long>(sum, kInfiniteRank));
}

std::vector<NodeId> eligible_parents(const NodeState& s) {
  std::vector<NodeId> out;
  for (const auto& [id, rank] : s.parent_candidates) {
    if (id == s.id || rank >= kInfiniteRank) continue;
    if (s.routing_table.contains(id)) continue;
    if (compute_rank(rank, s.etx_to(id)) >= kInfiniteRank) continue;
    out.push_back(id);
  }
  return out;
}

std::optional<NodeId> select_parent(const NodeState& s, Rank hysteresis) {
  const auto eligible = eligible_parents(s);
  if (eligible.empty()) return std::nullopt;

  NodeId best = eligible.front();
  Rank best_rank = kInfiniteRank;
  for (NodeId id : eligible) {
    const Rank r = compute_rank(s.parent_candidates.at(id), s.etx_to(id));
    if (r < best_rank) {
      best = id;
      best_rank = r;
    }
  }

  if (s.preferred_parent && *s.preferred_parent != best &&
      std::find(eligible.begin(), eligible.end(), *s.preferred_parent) != eligible.end()) {
    const NodeId cur = *s.preferred_parent;
    const Rank cur_rank = compute_rank(s.parent_candidates.at(cur), s.etx_to(cur));
    if (cur_rank <= best_rank || cur_rank - best_rank <= hysteresis) return cur;
  }
  return best;
}

void expire_routes(NodeState& s, Millis now, Millis lifetime) {
  std::erase_if(s.routing_table, [&](const auto& kv) { return now - kv.second.refreshed_at > lifetime; });
}

ParentUpdate update_parent(NodeState& s, const RplParams& p, ParentPolicy policy) {
  ParentUpdate u;
  u.old_parent = s.preferred_parent;
  u.old_rank = s.rank;
  if (s.is_root) return u;

  std::optional<NodeId> choice =
      policy == ParentPolicy::worst ? wp_select_parent(s) : select_parent(s, p.parent_hysteresis);
  Rank rank = kInfiniteRank;
  if (choice) rank = compute_rank(s.parent_candidates.at(*choice), s.etx_to(*choice));
  if (rank >= kInfiniteRank) choice.reset();

  s.preferred_parent = choice;
  s.rank = rank;
  u.parent_changed = u.old_parent != s.preferred_parent;
  u.rank_changed = u.old_rank != s.rank;
  const Rank delta = s.rank > u.old_rank ? s.rank - u.old_rank : u.old_rank - s.rank;
  u.needs_trickle_reset = delta >= kMinHopRankIncrease;
  return u;
}

DioOutcome handle_dio(NodeState& s, NodeId sender, const DioPayload& dio, double link_etx, const RplParams& p,
                      ParentPolicy policy) {
  DioOutcome out;
  if (s.is_root) {
    if (dio.version > s.version) {
      out.version_changed = true;
      out.old_version = s.version;
      s.version = dio.version;
      out.trickle_reset = true;
    } else if (dio.version == s.version) {
      out.consistent = true;
    } else {
      out.trickle_reset = true;
    }
    return out;
  }

  if (dio.version < s.version) {
    // A neighbour still on an older version: answer it quickly.
    out.ignored = true;
    out.trickle_reset = s.joined();
    return out;
  }

  const auto saved_parent = s.preferred_parent;
  const Rank saved_rank = s.rank;
  if (dio.version > s.version) {
    out.global_repair = true;
    out.version_changed = true;
    out.old_version = s.version;
    s.version = dio.version;
    s.rank = kInfiniteRank;
    s.preferred_parent.reset();
    s.parent_candidates.clear();
    s.routing_table.clear();
    out.trickle_reset = true;
  }

  auto known = s.parent_candidates.find(sender);
  const bool known_same = known != s.parent_candidates.end() && known->second == dio.rank;
  if (dio.rank >= kInfiniteRank)
    s.parent_candidates.erase(sender);
  else
    s.parent_candidates[sender] = dio.rank;
  s.etx_estimates[sender] = link_etx;

  out.parent = update_parent(s, p, policy);
  if (out.global_repair) {
    out.parent.old_parent = saved_parent;
    out.parent.old_rank = saved_rank;
    out.parent.parent_changed = saved_parent != s.preferred_parent;
    out.parent.rank_changed = saved_rank != s.rank;
    out.parent.needs_trickle_reset = true;
  }
  if (out.parent.needs_trickle_reset && s.joined()) out.trickle_reset = true;
  out.consistent = !out.global_repair && known_same && !out.parent.rank_changed && !out.parent.parent_changed;
  return out;
}

DisOutcome handle_dis(const NodeState& s) {
  if (!s.joined()) return {};
  return {true, true};
}

DaoOutcome handle_dao(NodeState& s, NodeId sender, const DaoPayload& dao, Millis now) {
  DaoOutcome out;
  if (!s.joined() || dao.target == s.id) return out;
  out.accepted = true;
  if (dao.no_path) {
    auto it = s.routing_table.find(dao.target);
    if (it != s.routing_table.end() && it->second.next_hop == sender) s.routing_table.erase(it);
  } else {
    auto it = s.routing_table.find(dao.target);
    out.duplicate = it != s.routing_table.end() && it->second.next_hop == sender;
    s.routing_table[dao.target] = {sender, now};
  }
  if (!s.is_root && s.preferred_parent) out.forward_to = s.preferred_parent;
  return out;
}

ForwardDecision route_data(NodeState& s, const DataPacket& pkt, NodeId from, int hop_limit) {
  ForwardDecision d;
  if (from != kNoNode && pkt.forwarding_error_flag) {
    std::erase_if(s.routing_table, [&](const auto& kv) { return kv.second.next_hop == from; });
    d.action = ForwardAction::bounce;
    d.next_hop = from;
    d.drop_reason = "f_flag_bounce";
    return d;
  }
  if (pkt.dst == s.id) {
    d.action = ForwardAction::deliver;
    return d;
  }
  if (std::find(pkt.hop_path.begin(), pkt.hop_path.end(), s.id) != pkt.hop_path.end()) {
    d.drop_reason = "loop";
    return d;
  }
  if (static_cast<int>(pkt.hop_path.size()) >= hop_limit) {
    d.drop_reason = "hop_limit";
    return d;
  }
  if (!s.joined()) {
    d.drop_reason = "no_route";
    return d;
  }
  if (pkt.dst != kRootId) {
    auto it = s.routing_table.find(pkt.dst);
    if (it != s.routing_table.end()) {
      d.action = ForwardAction::forward;
      d.next_hop = it->second.next_hop;
      d.upward = false;
      return d;
    }
  }
  if (s.preferred_parent) {
    d.action = ForwardAction::forward;
    d.next_hop = *s.preferred_parent;
    return d;
  }
  d.drop_reason = "no_route";
  return d;
}

}  // namespace rplids
