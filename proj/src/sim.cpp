#include "rplids/sim.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace rplids {

void SimConfig::validate(const GridTopology& topo) const {
  if (horizon <= 0) throw std::invalid_argument("horizon must be > 0");
  if (link_latency <= 0) throw std::invalid_argument("link latency must be > 0");
  if (!(loss_prob >= 0.0 && loss_prob < 1.0)) throw std::invalid_argument("loss probability must lie in [0, 1)");
  if (data_period <= 0) throw std::invalid_argument("data period must be > 0");
  if (first_dis_window <= 0) throw std::invalid_argument("first DIS window must be > 0");
  if (hop_limit <= 0) throw std::invalid_argument("hop limit must be > 0");
  if (rpl.trickle_imin_ms <= 0 || rpl.trickle_doublings < 0 || rpl.trickle_k <= 0)
    throw std::invalid_argument("invalid trickle parameters");
  if (rpl.dao_period_ms <= 0 || rpl.dis_period_ms <= 0 || rpl.route_lifetime_ms <= 0)
    throw std::invalid_argument("invalid RPL periods");
  window.validate();
  if (topo.size() < 2) throw std::invalid_argument("topology needs a root and at least one sensor");
  if (attack) rplids::validate(*attack, topo.size());
}

namespace {

enum class Act : std::uint8_t { trickle_fire, trickle_end, dis_timer, dao_timer, app_timer, deliver, dis_response,
                                attack_start, hf_dis };

struct Item {
  Millis time = 0;
  std::uint64_t seq = 0;
  Act act = Act::deliver;
  NodeId node = kNoNode;
  std::uint64_t gen = 0;

  NodeId from = kNoNode;
  MsgKind msg = MsgKind::none;
  DioPayload dio;
  DaoPayload dao;
  int dao_hops = 0;
  DataPacket data;
};

struct Later {
  bool operator()(const Item& a, const Item& b) const { return std::tie(a.time, a.seq) > std::tie(b.time, b.seq); }
};

class Engine {
 public:
  Engine(const GridTopology& topo, const SimConfig& cfg) : topo_(topo), cfg_(cfg), trace_(cfg.keep_events) {
    cfg_.validate(topo_);
    const std::size_t n = topo_.size();
    states_.reserve(n);
    for (NodeId i = 0; i < n; ++i) {
      states_.push_back(i == kRootId ? make_root(cfg_.rpl) : make_node(i, cfg_.rpl));
      monitors_.emplace_back(i, i == kRootId, cfg_.window);
      trickle_rng_.emplace_back(derive_seed(cfg_.seed, i, static_cast<std::uint64_t>(RngPurpose::trickle)));
      dis_rng_.emplace_back(derive_seed(cfg_.seed, i, static_cast<std::uint64_t>(RngPurpose::dis)));
      loss_rng_.emplace_back(derive_seed(cfg_.seed, i, static_cast<std::uint64_t>(RngPurpose::loss)));
    }
    gen_.assign(n, 0);
    data_seq_.assign(n, 0);
    dis_pending_.assign(n, false);
    delivery_ratio_.assign(n, std::vector<double>(n, 1.0));
    if (cfg_.attack) {
      attacker_.emplace(*cfg_.attack);
      sf_rng_ = Rng(derive_seed(cfg_.seed, cfg_.attack->attacker, static_cast<std::uint64_t>(RngPurpose::sf)));
    }
    joined_count_ = 1;
  }

  RunResult run() {
    const std::size_t n = topo_.size();
    do_trickle_reset(kRootId, "start");
    for (NodeId i = 1; i < n; ++i) {
      push_timer(static_cast<Millis>(dis_rng_[i].below(static_cast<std::uint64_t>(cfg_.first_dis_window))),
                 Act::dis_timer, i);
      push_timer(cfg_.data_period * i / static_cast<Millis>(n), Act::app_timer, i);
    }
    for (NodeId i = 0; i < n; ++i) push_timer(cfg_.rpl.dao_period_ms * i / static_cast<Millis>(n), Act::dao_timer, i);
    if (attacker_ && cfg_.attack->start_time < cfg_.horizon)
      push_timer(cfg_.attack->start_time, Act::attack_start, cfg_.attack->attacker);

    while (!queue_.empty() && queue_.top().time < cfg_.horizon) {
      Item it = queue_.top();
      queue_.pop();
      if (it.time < now_) throw std::logic_error("event queue went back in time");
      now_ = it.time;
      ++stats_.events_processed;
      dispatch(it);
    }
    while (!queue_.empty()) {
      if (queue_.top().act == Act::deliver && queue_.top().msg == MsgKind::data) ++stats_.data_in_flight;
      queue_.pop();
    }

    RunResult r{std::move(trace_), std::move(monitors_), std::move(states_), stats_, all_joined_at_};
    for (auto& m : r.monitors) m.finish(cfg_.horizon);
    return r;
  }

 private:
  void push(Item it) {
    it.seq = next_seq_++;
    queue_.push(std::move(it));
  }

  void push_timer(Millis t, Act act, NodeId node, std::uint64_t gen = 0) {
    Item it;
    it.time = t;
    it.act = act;
    it.node = node;
    it.gen = gen;
    push(std::move(it));
  }

  void emit(Event ev) {
    ev.time = now_;
    ev.seq = next_event_seq_++;
    monitors_[ev.subject].observe(ev);
    trace_.append(ev);
  }

  bool attacker_active(NodeId n) const { return attacker_ && attacker_->active(n, now_); }

  ParentPolicy policy_for(NodeId n) const {
    return attacker_ ? attacker_->parent_policy(n, now_) : ParentPolicy::best;
  }

  double link_etx(NodeId self, NodeId peer) const { return 1.0 / delivery_ratio_[self][peer]; }

  DioPayload make_dio(NodeId n) const {
    const NodeState& s = states_[n];
    DioPayload d;
    d.version = s.version;
    d.rank = attacker_ && attacker_->is(n) ? attacker_->advertised_rank(s, now_) : s.rank;
    return d;
  }

  // ------------------------------------------------------------ radio

  bool lost(NodeId from) { return cfg_.loss_prob > 0 && loss_rng_[from].bernoulli(cfg_.loss_prob); }

  void fill_payload(Event& ev, const Item& it) {
    ev.msg = it.msg;
    switch (it.msg) {
      case MsgKind::dio:
        ev.version = it.dio.version;
        ev.rank = it.dio.rank;
        break;
      case MsgKind::dao:
        ev.target = it.dao.target;
        ev.no_path = it.dao.no_path;
        break;
      case MsgKind::data:
        ev.src = it.data.src;
        ev.dst = it.data.dst;
        ev.data_seq = it.data.seq;
        ev.f_flag = it.data.forwarding_error_flag;
        break;
      default: break;
    }
  }

  void count_tx(MsgKind k) {
    switch (k) {
      case MsgKind::dio: ++stats_.dio_tx; break;
      case MsgKind::dis: ++stats_.dis_tx; break;
      case MsgKind::dao: ++stats_.dao_tx; break;
      case MsgKind::data: ++stats_.data_tx; break;
      default: break;
    }
  }

  void data_dropped(const std::string& reason) {
    ++stats_.data_dropped;
    ++stats_.drops_by_reason[reason];
  }

  void emit_drop(NodeId subject, const Item& it, NodeId peer, std::string reason) {
    Event ev;
    ev.kind = EventKind::drop;
    ev.subject = subject;
    ev.peer = peer;
    fill_payload(ev, it);
    ev.tag = reason;
    emit(std::move(ev));
    if (it.msg == MsgKind::data) data_dropped(reason);
  }

  void broadcast(NodeId from, Item it, std::string_view cause) {
    it.act = Act::deliver;
    it.from = from;
    it.time = now_ + cfg_.link_latency;
    Event ev;
    ev.kind = EventKind::msg_tx;
    ev.subject = from;
    ev.peer = kBroadcast;
    fill_payload(ev, it);
    ev.tag = std::string(cause);
    emit(std::move(ev));
    count_tx(it.msg);
    for (NodeId m : topo_.neighbors(from)) {
      if (lost(from)) {
        emit_drop(from, it, m, "link_loss");
        continue;
      }
      Item d = it;
      d.node = m;
      push(std::move(d));
    }
  }

  void unicast(NodeId from, NodeId to, Item it, std::string_view cause, bool forwarded = false, bool upward = true) {
    it.act = Act::deliver;
    it.from = from;
    it.node = to;
    it.time = now_ + cfg_.link_latency;
    Event ev;
    ev.kind = EventKind::msg_tx;
    ev.subject = from;
    ev.peer = to;
    fill_payload(ev, it);
    ev.forwarded = forwarded;
    ev.upward = upward;
    ev.etx = topo_.contains(to) ? link_etx(from, to) : 0.0;
    ev.tag = std::string(cause);
    emit(std::move(ev));
    count_tx(it.msg);
    if (!topo_.contains(to) || !topo_.in_range(from, to)) {
      emit_drop(from, it, to, "out_of_range");
      return;
    }
    if (cfg_.loss_prob > 0) {
      const bool drop = lost(from);
      double& ratio = delivery_ratio_[from][to];
      ratio = (1.0 - cfg_.rpl.etx_alpha) * ratio + cfg_.rpl.etx_alpha * (drop ? 0.0 : 1.0);
      ratio = std::max(ratio, 1.0 / 16.0);
      if (drop) {
        emit_drop(from, it, to, "link_loss");
        return;
      }
    }
    push(std::move(it));
  }

  void send_dao(NodeId from, NodeId to, NodeId target, bool no_path, int hops, std::string_view cause) {
    Item it;
    it.msg = MsgKind::dao;
    it.dao = {target, no_path};
    it.dao_hops = hops;
    unicast(from, to, std::move(it), cause);
  }

  void send_dio(NodeId n, std::string_view cause) {
    Item it;
    it.msg = MsgKind::dio;
    it.dio = make_dio(n);
    broadcast(n, std::move(it), cause);
  }

  void send_dis(NodeId n, std::string_view cause) {
    Item it;
    it.msg = MsgKind::dis;
    broadcast(n, std::move(it), cause);
  }

  // ------------------------------------------------------------ state changes

  void do_trickle_reset(NodeId n, std::string_view cause) {
    NodeState& s = states_[n];
    if (!trickle_reset(s.trickle, now_, trickle_rng_[n])) return;
    ++gen_[n];
    push_timer(s.trickle.next_fire, Act::trickle_fire, n, gen_[n]);
    Event ev;
    ev.kind = EventKind::trickle_reset;
    ev.subject = n;
    ev.tag = std::string(cause);
    emit(std::move(ev));
  }

  void note_join_state(bool was_joined, NodeId n) {
    const bool now_joined = states_[n].joined();
    if (was_joined == now_joined) return;
    joined_count_ += now_joined ? 1 : -1;
    if (joined_count_ == topo_.size() && all_joined_at_ == kNever) all_joined_at_ = now_;
  }

  void set_version(NodeId n, VersionNumber old_v, VersionNumber new_v) {
    Event ev;
    ev.kind = EventKind::version_change;
    ev.subject = n;
    ev.old_value = old_v;
    ev.new_value = new_v;
    emit(std::move(ev));
  }

  void apply_parent_update(NodeId n, const ParentUpdate& u) {
    const NodeState& s = states_[n];
    if (u.parent_changed) {
      Event ev;
      ev.kind = EventKind::parent_change;
      ev.subject = n;
      ev.old_value = u.old_parent ? static_cast<std::int64_t>(*u.old_parent) : -1;
      ev.new_value = s.preferred_parent ? static_cast<std::int64_t>(*s.preferred_parent) : -1;
      ev.etx = s.preferred_parent ? s.etx_to(*s.preferred_parent) : 0.0;
      emit(std::move(ev));
    }
    if (u.rank_changed) {
      Event ev;
      ev.kind = EventKind::rank_change;
      ev.subject = n;
      ev.old_value = u.old_rank;
      ev.new_value = s.rank;
      emit(std::move(ev));
    }
    if (u.parent_changed) {
      const auto new_parent = s.preferred_parent;
      if (u.old_parent) send_dao(n, *u.old_parent, n, true, 0, "no_path");
      if (new_parent) send_dao(n, *new_parent, n, false, 0, "parent_change");
    }
  }

  // ------------------------------------------------------------ handlers

  void dispatch(const Item& it) {
    switch (it.act) {
      case Act::trickle_fire: on_trickle_fire(it); break;
      case Act::trickle_end: on_trickle_end(it); break;
      case Act::dis_timer: on_dis_timer(it.node); break;
      case Act::dao_timer: on_dao_timer(it.node); break;
      case Act::app_timer: on_app_timer(it.node); break;
      case Act::deliver: on_deliver(it); break;
      case Act::dis_response: on_dis_response(it.node); break;
      case Act::attack_start: on_attack_start(it.node); break;
      case Act::hf_dis: on_hf_dis(it.node); break;
    }
  }

  void on_trickle_fire(const Item& it) {
    const NodeId n = it.node;
    if (it.gen != gen_[n]) return;
    NodeState& s = states_[n];
    const bool fire = trickle_should_fire(s.trickle) && s.joined();
    if (fire && attacker_ && attacker_->is(n) && attacker_->count_fire_for_reincrement(now_)) {
      const VersionNumber old_v = s.version;
      s.version = iv_advertise(old_v);
      set_version(n, old_v, s.version);
    }
    Event ev;
    ev.kind = EventKind::timer_fire;
    ev.subject = n;
    ev.tag = "trickle";
    ev.fire = fire;
    emit(std::move(ev));
    if (fire) send_dio(n, "trickle");
    push_timer(s.trickle.interval_start + s.trickle.i_current, Act::trickle_end, n, it.gen);
  }

  void on_trickle_end(const Item& it) {
    const NodeId n = it.node;
    if (it.gen != gen_[n]) return;
    NodeState& s = states_[n];
    trickle_double(s.trickle);
    trickle_begin_interval(s.trickle, now_, trickle_rng_[n]);
    push_timer(s.trickle.next_fire, Act::trickle_fire, n, it.gen);
  }

  void on_dis_timer(NodeId n) {
    if (!states_[n].joined()) {
      Event ev;
      ev.kind = EventKind::timer_fire;
      ev.subject = n;
      ev.tag = "dis";
      emit(std::move(ev));
      send_dis(n, "solicit");
    }
    push_timer(now_ + cfg_.rpl.dis_period_ms, Act::dis_timer, n);
  }

  void on_dao_timer(NodeId n) {
    NodeState& s = states_[n];
    expire_routes(s, now_, cfg_.rpl.route_lifetime_ms);
    if (!s.is_root && s.joined() && s.preferred_parent) {
      Event ev;
      ev.kind = EventKind::timer_fire;
      ev.subject = n;
      ev.tag = "dao";
      emit(std::move(ev));
      send_dao(n, *s.preferred_parent, n, false, 0, "periodic");
    }
    push_timer(now_ + cfg_.rpl.dao_period_ms, Act::dao_timer, n);
  }

  void on_app_timer(NodeId n) {
    NodeState& s = states_[n];
    DataPacket pkt;
    pkt.src = n;
    pkt.dst = kRootId;
    pkt.seq = ++data_seq_[n];

    Event ev;
    ev.kind = EventKind::app_send;
    ev.subject = n;
    ev.msg = MsgKind::data;
    ev.src = pkt.src;
    ev.dst = pkt.dst;
    ev.data_seq = pkt.seq;
    emit(std::move(ev));
    ++stats_.data_originated;

    const ForwardDecision d = route_data(s, pkt, kNoNode, cfg_.hop_limit);
    Item it;
    it.msg = MsgKind::data;
    it.data = std::move(pkt);
    if (d.action == ForwardAction::forward) {
      it.data.hop_path.push_back(n);
      unicast(n, d.next_hop, std::move(it), "app", false, d.upward);
    } else if (d.action == ForwardAction::deliver) {
      ++stats_.data_delivered;
    } else {
      emit_drop(n, it, kNoNode, std::string(d.drop_reason));
    }
    push_timer(now_ + cfg_.data_period, Act::app_timer, n);
  }

  void on_dis_response(NodeId n) {
    dis_pending_[n] = false;
    if (states_[n].joined()) send_dio(n, "dis_response");
  }

  void on_attack_start(NodeId n) {
    Event ev;
    ev.kind = EventKind::timer_fire;
    ev.subject = n;
    ev.tag = "attack_start";
    emit(std::move(ev));
    NodeState& s = states_[n];
    switch (cfg_.attack->kind) {
      case AttackKind::IV: {
        const VersionNumber old_v = s.version;
        s.version = iv_advertise(old_v);
        set_version(n, old_v, s.version);
        attacker_->reset_fire_count();
        do_trickle_reset(n, "attack");
        break;
      }
      case AttackKind::DR: do_trickle_reset(n, "attack"); break;
      case AttackKind::WP: {
        const bool was_joined = s.joined();
        const ParentUpdate u = update_parent(s, cfg_.rpl, ParentPolicy::worst);
        apply_parent_update(n, u);
        note_join_state(was_joined, n);
        do_trickle_reset(n, "attack");
        break;
      }
      case AttackKind::HF: push_timer(now_, Act::hf_dis, n); break;
      default: break;
    }
  }

  void on_hf_dis(NodeId n) {
    send_dis(n, "flood");
    push_timer(now_ + cfg_.attack->hf_interval, Act::hf_dis, n);
  }

  void on_deliver(const Item& it) {
    switch (it.msg) {
      case MsgKind::dio: on_dio(it); break;
      case MsgKind::dis: on_dis(it); break;
      case MsgKind::dao: on_dao(it); break;
      case MsgKind::data: on_data(it); break;
      default: break;
    }
  }

  void emit_delivery(const Item& it, std::string tag = {}) {
    Event ev;
    ev.kind = EventKind::msg_delivery;
    ev.subject = it.node;
    ev.peer = it.from;
    fill_payload(ev, it);
    ev.tag = std::move(tag);
    emit(std::move(ev));
  }

  void on_dio(const Item& it) {
    const NodeId n = it.node;
    NodeState& s = states_[n];
    const bool was_joined = s.joined();
    const DioOutcome out = handle_dio(s, it.from, it.dio, link_etx(n, it.from), cfg_.rpl, policy_for(n));
    emit_delivery(it);
    if (out.version_changed) set_version(n, out.old_version, s.version);
    apply_parent_update(n, out.parent);
    note_join_state(was_joined, n);
    if (out.consistent && s.trickle.running) ++s.trickle.counter_c;
    if (out.trickle_reset) {
      const char* cause = out.global_repair ? "global_repair" : out.ignored ? "stale_version" : "inconsistency";
      do_trickle_reset(n, cause);
    }
  }

  void on_dis(const Item& it) {
    const NodeId n = it.node;
    emit_delivery(it);
    const DisOutcome out = handle_dis(states_[n]);
    if (out.send_dio && !dis_pending_[n]) {
      dis_pending_[n] = true;
      push_timer(now_, Act::dis_response, n);
    }
    if (out.trickle_reset) do_trickle_reset(n, "dis");
  }

  void on_dao(const Item& it) {
    const NodeId n = it.node;
    NodeState& s = states_[n];
    const DaoOutcome out = handle_dao(s, it.from, it.dao, now_);
    emit_delivery(it, out.duplicate ? "dup" : "");
    if (!out.accepted) {
      emit_drop(n, it, it.from, s.joined() ? "dao_self_target" : "dao_unjoined");
      return;
    }
    if (!out.forward_to) return;
    if (it.dao_hops + 1 >= cfg_.hop_limit) {
      emit_drop(n, it, it.from, "hop_limit");
      return;
    }
    send_dao(n, *out.forward_to, it.dao.target, it.dao.no_path, it.dao_hops + 1, "dao_fwd");
  }

  void on_data(const Item& it) {
    const NodeId n = it.node;
    NodeState& s = states_[n];
    emit_delivery(it);

    Item out = it;
    if (attacker_active(n)) {
      const auto tr = attacker_->on_transit(out.data, n, now_, sf_rng_);
      if (tr.verdict == ForwardVerdict::drop) {
        emit_drop(n, it, it.from, std::string(tr.reason));
        return;
      }
    }
    const ForwardDecision d = route_data(s, it.data, it.from, cfg_.hop_limit);
    switch (d.action) {
      case ForwardAction::deliver: ++stats_.data_delivered; break;
      case ForwardAction::forward:
        out.data.hop_path.push_back(n);
        unicast(n, d.next_hop, std::move(out), "forward", true, d.upward);
        break;
      case ForwardAction::bounce:
      case ForwardAction::drop: emit_drop(n, it, it.from, std::string(d.drop_reason)); break;
    }
  }

  const GridTopology& topo_;
  SimConfig cfg_;
  EventTrace trace_;
  std::vector<NodeState> states_;
  std::vector<MonitorLog> monitors_;
  std::vector<Rng> trickle_rng_, dis_rng_, loss_rng_;
  Rng sf_rng_;
  std::optional<AttackerModel> attacker_;
  std::vector<std::uint64_t> gen_;
  std::vector<std::uint32_t> data_seq_;
  std::vector<bool> dis_pending_;
  std::vector<std::vector<double>> delivery_ratio_;
  std::priority_queue<Item, std::vector<Item>, Later> queue_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_event_seq_ = 0;
  Millis now_ = 0;
  SimStats stats_;
  std::size_t joined_count_ = 0;
  Millis all_joined_at_ = kNever;
};

}  // namespace

RunResult simulate(const GridTopology& topo, const SimConfig& cfg) { return Engine(topo, cfg).run(); }

bool parent_graph_acyclic(const std::vector<NodeState>& states) {
  for (const auto& s : states) {
    if (!s.joined() || s.is_root) continue;
    NodeId cur = s.id;
    std::size_t steps = 0;
    while (!states[cur].is_root) {
      const auto& st = states[cur];
      if (!st.preferred_parent || *st.preferred_parent >= states.size()) return false;
      const NodeId p = *st.preferred_parent;
      if (states[p].rank >= st.rank) return false;
      cur = p;
      if (++steps > states.size()) return false;
    }
  }
  return true;
}

}  // namespace rplids
