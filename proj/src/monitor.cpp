#include "rplids/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rplids {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "dio_tx",          "dio_rx",          "dis_tx",          "dis_rx",
    "dao_tx",          "dao_rx",          "data_tx",         "data_rx",
    "data_fwd",        "data_dropped",    "data_bounced",    "distinct_neighbors",
    "parent_changes",  "trickle_resets",  "rank_current",    "rank_min",
    "rank_max",        "rank_mean",       "rank_change_count", "version_current",
    "version_max_seen", "version_change_count", "adv_rank_min", "adv_rank_max",
    "adv_rank_mean",   "adv_rank_std",    "control_rate",    "data_rate",
    "etx_current",     "etx_mean",        "up_down_ratio",   "duplicate_dao",
    "f_flag_rx",       "dis_dio_responses", "ctrl_interarrival_mean",
};

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() { return kNames; }

std::size_t feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return i;
  throw std::out_of_range("unknown feature: " + std::string(name));
}

void WindowSpec::validate() const {
  if (width <= 0) throw std::invalid_argument("window width must be > 0");
  if (stride != width) throw std::invalid_argument("window stride must equal width");
}

MonitorLog::MonitorLog(NodeId node, bool is_root, WindowSpec spec) : node_(node), spec_(spec) {
  spec_.validate();
  if (is_root) {
    rank_ = kRootRank;
    version_ = version_max_ = 1;
  }
  open_window();
}

void MonitorLog::open_window() {
  acc_ = Acc{};
  acc_.rank_min = acc_.rank_max = rank_;
}

void MonitorLog::integrate_to(Millis t) {
  const double dt = static_cast<double>(t - gauge_since_);
  acc_.rank_area += rank_ * dt;
  acc_.etx_area += etx_ * dt;
  gauge_since_ = t;
}

void MonitorLog::advance_to(Millis t) {
  if (t < gauge_since_) throw std::invalid_argument("monitor events out of time order");
  while (t >= window_start_ + spec_.width) close_window();
}

void MonitorLog::finish(Millis horizon) {
  while (window_start_ + spec_.width <= horizon) close_window();
}

void MonitorLog::close_window() {
  const Millis end = window_start_ + spec_.width;
  integrate_to(end);
  const Acc& a = acc_;
  const double width_ms = static_cast<double>(spec_.width);
  const double width_s = width_ms / 1000.0;

  FeatureWindow w;
  w.node = node_;
  w.window_index = windows_.size();
  auto& f = w.features;
  f[0] = a.dio_tx;
  f[1] = a.dio_rx;
  f[2] = a.dis_tx;
  f[3] = a.dis_rx;
  f[4] = a.dao_tx;
  f[5] = a.dao_rx;
  f[6] = a.data_tx;
  f[7] = a.data_rx;
  f[8] = a.data_fwd;
  f[9] = a.data_dropped;
  f[10] = a.data_bounced;
  f[11] = static_cast<double>(a.heard.size());
  f[12] = a.parent_changes;
  f[13] = a.trickle_resets;
  f[14] = rank_;
  f[15] = a.rank_min;
  f[16] = a.rank_max;
  f[17] = a.rank_area / width_ms;
  f[18] = a.rank_changes;
  f[19] = version_;
  f[20] = version_max_;
  f[21] = a.version_changes;
  if (a.adv_n > 0) {
    const double mean = a.adv_sum / a.adv_n;
    f[22] = a.adv_min;
    f[23] = a.adv_max;
    f[24] = mean;
    f[25] = std::sqrt(std::max(0.0, a.adv_sumsq / a.adv_n - mean * mean));
  }
  f[26] = (a.dio_tx + a.dio_rx + a.dis_tx + a.dis_rx + a.dao_tx + a.dao_rx) / width_s;
  f[27] = (a.data_tx + a.data_rx + a.data_fwd) / width_s;
  f[28] = etx_;
  f[29] = a.etx_area / width_ms;
  f[30] = a.up + a.down > 0 ? a.up / (a.up + a.down) : 0.0;
  f[31] = a.dup_dao;
  f[32] = a.f_rx;
  f[33] = a.dis_responses;
  f[34] = a.ctrl_rx_n >= 2 ? static_cast<double>(a.ctrl_last - a.ctrl_first) / 1000.0 / (a.ctrl_rx_n - 1) : 0.0;
  windows_.push_back(w);

  window_start_ = end;
  open_window();
}

void MonitorLog::observe(const Event& ev) {
  if (ev.subject != node_) return;
  advance_to(ev.time);
  Acc& a = acc_;

  auto control_arrival = [&] {
    if (a.ctrl_rx_n == 0) a.ctrl_first = ev.time;
    a.ctrl_last = ev.time;
    ++a.ctrl_rx_n;
  };

  switch (ev.kind) {
    case EventKind::msg_tx:
      switch (ev.msg) {
        case MsgKind::dio:
          ++a.dio_tx;
          if (ev.tag == "dis_response") ++a.dis_responses;
          break;
        case MsgKind::dis: ++a.dis_tx; break;
        case MsgKind::dao: ++a.dao_tx; break;
        case MsgKind::data:
          ++(ev.forwarded ? a.data_fwd : a.data_tx);
          ++(ev.upward ? a.up : a.down);
          break;
        case MsgKind::none: break;
      }
      break;
    case EventKind::msg_delivery:
      if (ev.peer != kNoNode) a.heard.insert(ev.peer);
      switch (ev.msg) {
        case MsgKind::dio: {
          ++a.dio_rx;
          const double r = ev.rank;
          a.adv_min = a.adv_n == 0 ? r : std::min(a.adv_min, r);
          a.adv_max = a.adv_n == 0 ? r : std::max(a.adv_max, r);
          a.adv_sum += r;
          a.adv_sumsq += r * r;
          ++a.adv_n;
          version_max_ = std::max(version_max_, static_cast<double>(ev.version));
          control_arrival();
          break;
        }
        case MsgKind::dis:
          ++a.dis_rx;
          control_arrival();
          break;
        case MsgKind::dao:
          ++a.dao_rx;
          if (ev.tag == "dup") ++a.dup_dao;
          control_arrival();
          break;
        case MsgKind::data:
          ++a.data_rx;
          if (ev.f_flag) ++a.f_rx;
          break;
        case MsgKind::none: break;
      }
      break;
    case EventKind::drop:
      if (ev.msg == MsgKind::data) ++(ev.tag == "f_flag_bounce" ? a.data_bounced : a.data_dropped);
      break;
    case EventKind::parent_change:
      integrate_to(ev.time);
      ++a.parent_changes;
      etx_ = ev.new_value < 0 ? 0.0 : ev.etx;
      break;
    case EventKind::rank_change:
      integrate_to(ev.time);
      rank_ = static_cast<double>(ev.new_value);
      a.rank_min = std::min(a.rank_min, rank_);
      a.rank_max = std::max(a.rank_max, rank_);
      ++a.rank_changes;
      break;
    case EventKind::version_change:
      version_ = static_cast<double>(ev.new_value);
      version_max_ = std::max(version_max_, version_);
      ++a.version_changes;
      break;
    case EventKind::trickle_reset: ++a.trickle_resets; break;
    case EventKind::timer_fire:
    case EventKind::app_send: break;
  }
}

const FeatureWindow& MonitorLog::extract_window(std::size_t idx) const {
  if (idx >= windows_.size())
    throw std::out_of_range("window " + std::to_string(idx) + " has not elapsed at node " + std::to_string(node_));
  return windows_[idx];
}

std::vector<MonitorLog> replay_monitors(const std::vector<Event>& events, std::size_t node_count, Millis horizon,
                                        WindowSpec spec) {
  std::vector<MonitorLog> logs;
  logs.reserve(node_count);
  for (std::size_t n = 0; n < node_count; ++n) logs.emplace_back(static_cast<NodeId>(n), n == kRootId, spec);
  for (const auto& ev : events)
    if (ev.subject < node_count) logs[ev.subject].observe(ev);
  for (auto& l : logs) l.finish(horizon);
  return logs;
}

std::vector<FeatureWindow> label_windows(RunKind kind, Millis attack_start, const std::vector<FeatureWindow>& windows,
                                         const WindowSpec& spec) {
  std::vector<FeatureWindow> out;
  for (const auto& w : windows) {
    if (spec.start(w.window_index) < attack_start) continue;
    out.push_back(w);
    out.back().label = kind == RunKind::benign ? Label::benign : Label::malicious;
  }
  return out;
}

void write_feature_csv(std::ostream& os, const std::vector<FeatureWindow>& rows) {
  os << "node,window,label";
  for (std::size_t i = 1; i <= kFeatureCount; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, ",f%02zu", i);
    os << buf;
  }
  os << '\n';
  for (const auto& r : rows) {
    os << r.node << ',' << r.window_index << ',' << to_string(r.label);
    for (double v : r.features) os << ',' << fmt_real(v);
    os << '\n';
  }
}

std::vector<FeatureWindow> read_feature_csv(std::istream& is) {
  std::vector<FeatureWindow> out;
  std::string line;
  if (!std::getline(is, line) || line.rfind("node,window,label", 0) != 0)
    throw std::invalid_argument("feature csv: missing header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    FeatureWindow w;
    try {
      std::getline(ss, cell, ',');
      w.node = static_cast<NodeId>(std::stoul(cell));
      std::getline(ss, cell, ',');
      w.window_index = std::stoul(cell);
      std::getline(ss, cell, ',');
      w.label = parse_label(cell);
      for (auto& v : w.features) {
        if (!std::getline(ss, cell, ',')) throw std::invalid_argument("short row");
        std::size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument("bad number");
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("feature csv: bad row '" + line + "': " + e.what());
    }
    if (std::getline(ss, cell, ',')) throw std::invalid_argument("feature csv: long row '" + line + "'");
    out.push_back(w);
  }
  return out;
}

void write_feature_manifest(std::ostream& os) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "f%02zu", i + 1);
    os << buf << ',' << kNames[i] << '\n';
  }
}

}  // namespace rplids
