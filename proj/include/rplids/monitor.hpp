// Per-node passive observation of the trace and its reduction to fixed-width
// 35-feature windows.
#pragma once

#include <array>
#include <iosfwd>
#include <set>
#include <string_view>
#include <vector>

#include "rplids/event.hpp"
#include "rplids/types.hpp"

namespace rplids {

inline constexpr std::size_t kFeatureCount = 35;
using FeatureVector = std::array<double, kFeatureCount>;

/// Column names in catalog order.
const std::array<std::string_view, kFeatureCount>& feature_names();

/// Index of a named feature; throws std::out_of_range for unknown names.
std::size_t feature_index(std::string_view name);

struct WindowSpec {
  Millis width = 60000;
  /// Windows never overlap: stride must equal width.
  Millis stride = 60000;

  void validate() const;
  Millis start(std::size_t idx) const { return static_cast<Millis>(idx) * stride; }
  /// Whole windows inside [0, horizon); a partial tail is not counted.
  std::size_t complete_windows(Millis horizon) const { return horizon <= 0 ? 0 : static_cast<std::size_t>(horizon / width); }
};

struct FeatureWindow {
  NodeId node = kNoNode;
  std::size_t window_index = 0;
  FeatureVector features{};
  Label label = Label::benign;

  bool operator==(const FeatureWindow&) const = default;
};

/// What a single node sees: its own transmissions, broadcasts it hears,
/// unicasts addressed to it, and its own state changes. The event loop only
/// ever hands a node events whose subject is that node.
class MonitorLog {
 public:
  MonitorLog(NodeId node, bool is_root, WindowSpec spec = {});

  NodeId node() const { return node_; }
  const WindowSpec& spec() const { return spec_; }

  /// Events for other subjects are ignored. Events must arrive in time order.
  void observe(const Event& ev);
  /// Closes every window that ends at or before `horizon`.
  void finish(Millis horizon);

  std::size_t window_count() const { return windows_.size(); }
  /// Throws std::out_of_range when window idx has not fully elapsed.
  const FeatureWindow& extract_window(std::size_t idx) const;
  const std::vector<FeatureWindow>& windows() const { return windows_; }

 private:
  struct Acc {
    double dio_tx = 0, dio_rx = 0, dis_tx = 0, dis_rx = 0, dao_tx = 0, dao_rx = 0;
    double data_tx = 0, data_rx = 0, data_fwd = 0, data_dropped = 0, data_bounced = 0;
    std::set<NodeId> heard;
    double parent_changes = 0, trickle_resets = 0;
    double rank_min = 0, rank_max = 0, rank_area = 0, rank_changes = 0;
    double version_changes = 0;
    double adv_n = 0, adv_min = 0, adv_max = 0, adv_sum = 0, adv_sumsq = 0;
    double etx_area = 0;
    double up = 0, down = 0;
    double dup_dao = 0, f_rx = 0, dis_responses = 0;
    double ctrl_rx_n = 0;
    Millis ctrl_first = 0, ctrl_last = 0;
  };

  void advance_to(Millis t);
  void close_window();
  void integrate_to(Millis t);
  void open_window();

  NodeId node_;
  WindowSpec spec_;
  std::vector<FeatureWindow> windows_;

  // Gauges carried across windows.
  double rank_ = kInfiniteRank;
  double version_ = 0;
  double version_max_ = 0;
  double etx_ = 0;

  Millis window_start_ = 0;
  Millis gauge_since_ = 0;
  Acc acc_;
};

/// Recomputes every node's monitor from a recorded event sequence.
std::vector<MonitorLog> replay_monitors(const std::vector<Event>& events, std::size_t node_count, Millis horizon,
                                        WindowSpec spec = {});

enum class RunKind : std::uint8_t { benign, attack };

/// Keeps windows starting at or after attack_start and labels them by run
/// kind. Applying the same cut to the benign run keeps the classes balanced.
std::vector<FeatureWindow> label_windows(RunKind kind, Millis attack_start, const std::vector<FeatureWindow>& windows,
                                         const WindowSpec& spec = {});

/// `node,window,label,f01..f35`, values written with full precision.
void write_feature_csv(std::ostream& os, const std::vector<FeatureWindow>& rows);
/// Throws std::invalid_argument on malformed input.
std::vector<FeatureWindow> read_feature_csv(std::istream& is);
/// One `fNN,name` line per feature.
void write_feature_manifest(std::ostream& os);

}  // namespace rplids
