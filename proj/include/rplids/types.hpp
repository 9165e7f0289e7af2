// Core scalar types shared by every module.
#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rplids {

using NodeId = std::uint32_t;
using Rank = std::uint32_t;
using VersionNumber = std::uint32_t;

/// Simulated time in integer milliseconds.
using Millis = std::int64_t;

inline constexpr NodeId kRootId = 0;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr NodeId kBroadcast = kNoNode - 1;

inline constexpr Rank kMinHopRankIncrease = 256;
inline constexpr Rank kRootRank = 256;
inline constexpr Rank kInfiniteRank = 0xFFFF;

inline constexpr Millis kNever = std::numeric_limits<Millis>::max();

enum class Label : std::uint8_t { benign = 0, malicious = 1 };

inline std::string_view to_string(Label l) { return l == Label::benign ? "benign" : "malicious"; }

inline Label parse_label(std::string_view s) {
  if (s == "benign") return Label::benign;
  if (s == "malicious") return Label::malicious;
  throw std::invalid_argument("unknown label: " + std::string(s));
}

enum class AttackKind : std::uint8_t { DR, IV, BH, SF, WP, DI, HF };

inline constexpr AttackKind kAllAttacks[] = {AttackKind::DR, AttackKind::IV, AttackKind::BH, AttackKind::SF,
                                             AttackKind::WP, AttackKind::DI, AttackKind::HF};

inline std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::DR: return "DR";
    case AttackKind::IV: return "IV";
    case AttackKind::BH: return "BH";
    case AttackKind::SF: return "SF";
    case AttackKind::WP: return "WP";
    case AttackKind::DI: return "DI";
    case AttackKind::HF: return "HF";
  }
  return "?";
}

inline AttackKind parse_attack(std::string_view s) {
  for (auto k : kAllAttacks)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown attack kind: " + std::string(s));
}

}  // namespace rplids
