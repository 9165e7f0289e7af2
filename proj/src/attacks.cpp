#include "rplids/attacks.hpp"

#include <stdexcept>
#include <string>

namespace rplids {

void validate(const AttackConfig& cfg, std::size_t node_count) {
  if (cfg.attacker == kRootId || cfg.attacker >= node_count)
    throw std::invalid_argument("attacker must be a sensor node id, got " + std::to_string(cfg.attacker));
  if (cfg.start_time < 0) throw std::invalid_argument("attack start_time must be >= 0");
  if (cfg.kind == AttackKind::SF && !(cfg.sf_drop_prob >= 0.0 && cfg.sf_drop_prob <= 1.0))
    throw std::invalid_argument("sf_drop_prob must lie in [0, 1]");
  if (cfg.kind == AttackKind::HF && cfg.hf_interval <= 0) throw std::invalid_argument("hf_interval must be > 0");
  if (cfg.kind == AttackKind::IV && cfg.iv_reincrement_fires <= 0)
    throw std::invalid_argument("iv_reincrement_fires must be > 0");
}

std::optional<Rank> dr_advertise(const NodeState& s, Rank advertised) {
  if (!s.joined()) return std::nullopt;
  return advertised;
}

ForwardVerdict bh_forward(const DataPacket& pkt, NodeId self) {
  return is_transit(pkt, self) ? ForwardVerdict::drop : ForwardVerdict::forward;
}

ForwardVerdict sf_forward(const DataPacket& pkt, NodeId self, Rng& rng, double p) {
  if (!is_transit(pkt, self)) return ForwardVerdict::forward;
  return rng.bernoulli(p) ? ForwardVerdict::drop : ForwardVerdict::forward;
}

std::optional<NodeId> wp_select_parent(const NodeState& s) {
  std::optional<NodeId> worst;
  Rank worst_rank = 0;
  for (NodeId id : eligible_parents(s)) {
    const Rank r = compute_rank(s.parent_candidates.at(id), s.etx_to(id));
    if (!worst || r > worst_rank) {
      worst = id;
      worst_rank = r;
    }
  }
  return worst;
}

DataPacket di_mark(DataPacket pkt, NodeId self) {
  if (is_transit(pkt, self)) pkt.forwarding_error_flag = true;
  return pkt;
}

std::vector<Millis> hf_schedule(const AttackConfig& cfg, Millis horizon) {
  std::vector<Millis> out;
  if (cfg.hf_interval <= 0) return out;
  for (Millis t = cfg.start_time; t < horizon; t += cfg.hf_interval) out.push_back(t);
  return out;
}

Rank AttackerModel::advertised_rank(const NodeState& s, Millis now) const {
  if (cfg_.kind == AttackKind::DR && active(s.id, now)) return dr_advertise(s, cfg_.dr_advertised_rank).value_or(s.rank);
  return s.rank;
}

ParentPolicy AttackerModel::parent_policy(NodeId n, Millis now) const {
  return cfg_.kind == AttackKind::WP && active(n, now) ? ParentPolicy::worst : ParentPolicy::best;
}

bool AttackerModel::rewrites_dio() const {
  return cfg_.kind == AttackKind::DR || cfg_.kind == AttackKind::IV || cfg_.kind == AttackKind::WP;
}

AttackerModel::TransitResult AttackerModel::on_transit(DataPacket& pkt, NodeId self, Millis now, Rng& rng) const {
  if (!active(self, now) || !is_transit(pkt, self)) return {};
  switch (cfg_.kind) {
    case AttackKind::BH:
      if (bh_forward(pkt, self) == ForwardVerdict::drop) return {ForwardVerdict::drop, "blackhole"};
      break;
    case AttackKind::SF:
      if (sf_forward(pkt, self, rng, cfg_.sf_drop_prob) == ForwardVerdict::drop)
        return {ForwardVerdict::drop, "selective_forwarding"};
      break;
    case AttackKind::DI:
      pkt = di_mark(std::move(pkt), self);
      break;
    default:
      break;
  }
  return {};
}

bool AttackerModel::count_fire_for_reincrement(Millis now) {
  if (cfg_.kind != AttackKind::IV || !cfg_.active(now)) return false;
  if (++fires_since_bump_ < cfg_.iv_reincrement_fires) return false;
  fires_since_bump_ = 0;
  return true;
}

}  // namespace rplids
