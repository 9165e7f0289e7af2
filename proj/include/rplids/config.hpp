// Every tunable default in one place, readable from and printable as a
// line-oriented `key = value` file.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rplids/architectures.hpp"
#include "rplids/attacks.hpp"
#include "rplids/sim.hpp"
#include "rplids/topology.hpp"

namespace rplids {

struct Config {
  int grid_cols = 6;
  int grid_rows = 5;
  double grid_spacing = 20;
  double tx_range = 25;

  /// Protocol, radio and traffic knobs. `sim.attack` is ignored here.
  SimConfig sim;
  /// Attack parameters applied to generated scenarios (kind and attacker
  /// come from the plan).
  AttackConfig attack;
  CvSettings cv;
  CostParams cost;

  /// Throws std::invalid_argument for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  /// `key = value`, one per line, in keys() order.
  std::string show() const;

  /// Lines are `key = value`; blank lines and `#` comments are skipped.
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  GridTopology topology() const;
  /// Simulation settings for one run.
  SimConfig sim_config(std::uint64_t seed, Millis horizon, std::optional<AttackConfig> attack) const;
  /// Hash over every setting that changes simulated traffic.
  std::uint64_t sim_fingerprint() const;
};

}  // namespace rplids
