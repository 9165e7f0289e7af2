// Trace records and their line-oriented text form:
//   time_ms,seq,kind,subject,detail
// where detail is a ';'-separated list of key=value pairs.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rplids/rpl.hpp"
#include "rplids/types.hpp"

namespace rplids {

enum class EventKind : std::uint8_t {
  msg_tx,
  msg_delivery,
  timer_fire,
  app_send,
  drop,
  parent_change,
  rank_change,
  version_change,
  trickle_reset,
};

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);
std::string_view to_string(MsgKind k);
MsgKind parse_msg_kind(std::string_view s);

/// One trace record. `subject` is the node from whose point of view the
/// event happened (sender for msg_tx, receiver for msg_delivery).
struct Event {
  Millis time = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::msg_tx;
  NodeId subject = kNoNode;

  MsgKind msg = MsgKind::none;
  /// msg_tx: destination or kBroadcast. msg_delivery: sender.
  NodeId peer = kNoNode;

  // DIO
  VersionNumber version = 0;
  Rank rank = 0;
  // DAO
  NodeId target = kNoNode;
  bool no_path = false;
  // DATA
  NodeId src = kNoNode;
  NodeId dst = kNoNode;
  std::uint32_t data_seq = 0;
  bool f_flag = false;
  bool forwarded = false;
  bool upward = true;

  /// ETX towards `peer` for unicast transmissions and parent changes.
  double etx = 0;
  /// rank/version/parent changes.
  std::int64_t old_value = 0;
  std::int64_t new_value = 0;
  /// drop reason, timer name or transmission cause.
  std::string tag;
  /// trickle fire decision.
  bool fire = false;

  bool operator==(const Event&) const = default;
};

std::string format_detail(const Event& ev);
std::string format_event(const Event& ev);
/// Inverse of format_event; throws std::invalid_argument on malformed input.
Event parse_event(std::string_view line);

/// Ordered events plus a running FNV-1a digest over their text lines.
class EventTrace {
 public:
  explicit EventTrace(bool keep_events = true) : keep_(keep_events) {}

  void append(const Event& ev);
  std::uint64_t digest() const { return digest_; }
  std::size_t count() const { return count_; }
  const std::vector<Event>& events() const { return events_; }
  bool keeps_events() const { return keep_; }

  std::string to_text() const;
  static EventTrace from_text(std::string_view text);

 private:
  bool keep_;
  std::vector<Event> events_;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
  std::size_t count_ = 0;
};

std::string hex64(std::uint64_t v);

}  // namespace rplids
