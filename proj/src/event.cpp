#include "rplids/event.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

#include "rplids/rng.hpp"

namespace rplids {

namespace {

constexpr std::string_view kEventKindNames[] = {"msg_tx", "msg_delivery", "timer_fire", "app_send", "drop",
                                               "parent_change", "rank_change", "version_change", "trickle_reset"};
constexpr std::string_view kMsgKindNames[] = {"none", "DIO", "DIS", "DAO", "DATA"};

template <typename T>
void put_int(std::string& out, T v) {
  char buf[24];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

void put_key(std::string& out, std::string_view key) {
  if (!out.empty()) out += ';';
  out += key;
  out += '=';
}

void put_node(std::string& out, NodeId n) {
  if (n == kBroadcast)
    out += '*';
  else
    put_int(out, n);
}

template <typename T>
T to_number(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::invalid_argument("bad number in trace: '" + std::string(s) + "'");
  return v;
}

double to_double(std::string_view s) {
  // from_chars for double is unavailable in older libstdc++ releases.
  std::string tmp(s);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) throw std::invalid_argument("bad real in trace: '" + tmp + "'");
  return v;
}

NodeId to_node(std::string_view s) { return s == "*" ? kBroadcast : to_number<NodeId>(s); }

}  // namespace

std::string_view to_string(EventKind k) { return kEventKindNames[static_cast<int>(k)]; }

EventKind parse_event_kind(std::string_view s) {
  for (int i = 0; i < 9; ++i)
    if (kEventKindNames[i] == s) return static_cast<EventKind>(i);
  throw std::invalid_argument("unknown event kind: " + std::string(s));
}

std::string_view to_string(MsgKind k) { return kMsgKindNames[static_cast<int>(k)]; }

MsgKind parse_msg_kind(std::string_view s) {
  for (int i = 0; i < 5; ++i)
    if (kMsgKindNames[i] == s) return static_cast<MsgKind>(i);
  throw std::invalid_argument("unknown message kind: " + std::string(s));
}

std::string format_detail(const Event& ev) {
  const Event d{};
  std::string out;
  if (ev.msg != d.msg) put_key(out, "msg"), out += to_string(ev.msg);
  if (ev.peer != d.peer) put_key(out, "peer"), put_node(out, ev.peer);
  if (ev.version != d.version) put_key(out, "ver"), put_int(out, ev.version);
  if (ev.rank != d.rank) put_key(out, "rank"), put_int(out, ev.rank);
  if (ev.target != d.target) put_key(out, "target"), put_node(out, ev.target);
  if (ev.no_path) put_key(out, "nopath"), out += '1';
  if (ev.src != d.src) put_key(out, "src"), put_node(out, ev.src);
  if (ev.dst != d.dst) put_key(out, "dst"), put_node(out, ev.dst);
  if (ev.data_seq != d.data_seq) put_key(out, "seq"), put_int(out, ev.data_seq);
  if (ev.f_flag) put_key(out, "f"), out += '1';
  if (ev.forwarded) put_key(out, "fwd"), out += '1';
  if (!ev.upward) put_key(out, "up"), out += '0';
  if (ev.etx != d.etx) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", ev.etx);
    put_key(out, "etx");
    out += buf;
  }
  if (ev.old_value != d.old_value) put_key(out, "old"), put_int(out, ev.old_value);
  if (ev.new_value != d.new_value) put_key(out, "new"), put_int(out, ev.new_value);
  if (!ev.tag.empty()) put_key(out, "tag"), out += ev.tag;
  if (ev.fire) put_key(out, "fire"), out += '1';
  return out;
}

std::string format_event(const Event& ev) {
  std::string out;
  out.reserve(96);
  put_int(out, ev.time);
  out += ',';
  put_int(out, ev.seq);
  out += ',';
  out += to_string(ev.kind);
  out += ',';
  put_int(out, ev.subject);
  out += ',';
  out += format_detail(ev);
  return out;
}

Event parse_event(std::string_view line) {
  std::string_view parts[5];
  std::size_t start = 0;
  for (int i = 0; i < 4; ++i) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) throw std::invalid_argument("truncated trace line: " + std::string(line));
    parts[i] = line.substr(start, comma - start);
    start = comma + 1;
  }
  parts[4] = line.substr(start);

  Event ev;
  ev.time = to_number<Millis>(parts[0]);
  ev.seq = to_number<std::uint64_t>(parts[1]);
  ev.kind = parse_event_kind(parts[2]);
  ev.subject = to_number<NodeId>(parts[3]);

  std::string_view detail = parts[4];
  while (!detail.empty()) {
    auto semi = detail.find(';');
    std::string_view kv = detail.substr(0, semi);
    detail = semi == std::string_view::npos ? std::string_view{} : detail.substr(semi + 1);
    auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("bad detail field: " + std::string(kv));
    std::string_view key = kv.substr(0, eq);
    std::string_view val = kv.substr(eq + 1);
    if (key == "msg") ev.msg = parse_msg_kind(val);
    else if (key == "peer") ev.peer = to_node(val);
    else if (key == "ver") ev.version = to_number<VersionNumber>(val);
    else if (key == "rank") ev.rank = to_number<Rank>(val);
    else if (key == "target") ev.target = to_node(val);
    else if (key == "nopath") ev.no_path = val == "1";
    else if (key == "src") ev.src = to_node(val);
    else if (key == "dst") ev.dst = to_node(val);
    else if (key == "seq") ev.data_seq = to_number<std::uint32_t>(val);
    else if (key == "f") ev.f_flag = val == "1";
    else if (key == "fwd") ev.forwarded = val == "1";
    else if (key == "up") ev.upward = val != "0";
    else if (key == "etx") ev.etx = to_double(val);
    else if (key == "old") ev.old_value = to_number<std::int64_t>(val);
    else if (key == "new") ev.new_value = to_number<std::int64_t>(val);
    else if (key == "tag") ev.tag = std::string(val);
    else if (key == "fire") ev.fire = val == "1";
    else throw std::invalid_argument("unknown detail key: " + std::string(key));
  }
  return ev;
}

void EventTrace::append(const Event& ev) {
  const std::string line = format_event(ev);
  digest_ = fnv1a(line, digest_);
  digest_ = fnv1a("\n", digest_);
  ++count_;
  if (keep_) events_.push_back(ev);
}

std::string EventTrace::to_text() const {
  std::string out;
  for (const auto& ev : events_) {
    out += format_event(ev);
    out += '\n';
  }
  return out;
}

EventTrace EventTrace::from_text(std::string_view text) {
  EventTrace t;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty()) continue;
    t.append(parse_event(line));
  }
  return t;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace rplids
