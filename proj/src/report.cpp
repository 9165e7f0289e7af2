#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "rplids/experiments.hpp"

namespace rplids {

namespace {

std::string fixed6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Sorting first makes the sum independent of input row order.
double mean_sorted(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_sorted(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

int attack_order(AttackKind k) {
  int i = 0;
  for (auto a : kAllAttacks) {
    if (a == k) return i;
    ++i;
  }
  return i;
}

int scheme_order(const std::string& s) {
  if (s.empty()) return -1;
  const auto& std_s = standard_schemes();
  for (std::size_t i = 0; i < std_s.size(); ++i)
    if (to_string(std_s[i]) == s) return static_cast<int>(i);
  return 1000;
}

// (arch, scheme, attack) in a stable display order.
struct SeriesKey {
  ArchitectureKind arch;
  std::string scheme;
  AttackKind attack;
  bool operator<(const SeriesKey& o) const {
    if (arch != o.arch) return arch < o.arch;
    if (scheme_order(scheme) != scheme_order(o.scheme)) return scheme_order(scheme) < scheme_order(o.scheme);
    if (scheme != o.scheme) return scheme < o.scheme;
    return attack_order(attack) < attack_order(o.attack);
  }
};

std::string display_scheme(const std::string& s) { return s.empty() ? "-" : s; }

}  // namespace

void Table::write_csv(std::ostream& os) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

Table root_accuracy_table(const std::vector<ResultRow>& rows, const GridTopology& topo) {
  // attack -> level -> accuracies over attackers at that level
  std::map<int, std::map<int, std::vector<double>>> acc;
  std::map<int, std::set<NodeId>> attackers;
  std::set<int> levels;
  for (const auto& r : rows) {
    if (r.arch != ArchitectureKind::CIDwL || r.id_nodes.size() != 1 || r.id_nodes[0] != kRootId) continue;
    const int lvl = topo.level(r.attacker);
    acc[attack_order(r.attack)][lvl].push_back(r.accuracy);
    attackers[attack_order(r.attack)].insert(r.attacker);
    levels.insert(lvl);
  }
  std::size_t expected = 0;
  for (const auto& [a, s] : attackers) expected = std::max(expected, s.size());

  Table t;
  t.header = {"attack"};
  for (int l : levels) t.header.push_back("L" + std::to_string(l));
  t.header.insert(t.header.end(), {"major_difference", "attackers", "complete"});
  for (const auto& [ai, by_level] : acc) {
    std::vector<std::string> row{std::string(to_string(kAllAttacks[ai]))};
    double lo = INFINITY, hi = -INFINITY;
    bool level_gap = false;
    for (int l : levels) {
      auto it = by_level.find(l);
      if (it == by_level.end()) {
        row.push_back("");
        level_gap = true;
        continue;
      }
      const double m = mean_sorted(it->second);
      lo = std::min(lo, m);
      hi = std::max(hi, m);
      row.push_back(fixed6(m));
    }
    row.push_back(fixed6(hi - lo));
    row.push_back(std::to_string(attackers[ai].size()));
    row.push_back(attackers[ai].size() == expected && !level_gap ? "yes" : "no");
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table by_count_table(const std::vector<ResultRow>& rows) {
  std::map<SeriesKey, std::map<std::size_t, std::vector<double>>> acc;
  for (const auto& r : rows) acc[{r.arch, r.scheme, r.attack}][r.id_nodes.size()].push_back(r.accuracy);
  Table t;
  t.header = {"arch", "scheme", "attack", "id_nodes", "mean_accuracy", "scenarios"};
  for (const auto& [k, by_n] : acc)
    for (const auto& [n, v] : by_n)
      t.rows.push_back({std::string(to_string(k.arch)), display_scheme(k.scheme), std::string(to_string(k.attack)),
                        std::to_string(n), fixed6(mean_sorted(v)), std::to_string(v.size())});
  return t;
}

Table best_table(const std::vector<ResultRow>& rows) {
  struct Best {
    double acc = -1;
    std::size_t nodes = 0;
  };
  std::map<SeriesKey, std::map<NodeId, Best>> best;
  for (const auto& r : rows) {
    Best& b = best[{r.arch, r.scheme, r.attack}][r.attacker];
    const std::size_t n = r.id_nodes.size();
    if (r.accuracy > b.acc || (r.accuracy == b.acc && n < b.nodes)) b = {r.accuracy, n};
  }
  Table t;
  t.header = {"arch", "scheme", "attack", "attackers", "best_accuracy_mean", "nodes_max", "nodes_min", "nodes_median"};
  for (const auto& [k, per] : best) {
    std::vector<double> accs, sizes;
    for (const auto& [a, b] : per) {
      accs.push_back(b.acc);
      sizes.push_back(static_cast<double>(b.nodes));
    }
    char med[32];
    std::snprintf(med, sizeof med, "%g", median_sorted(sizes));
    t.rows.push_back({std::string(to_string(k.arch)), display_scheme(k.scheme), std::string(to_string(k.attack)),
                      std::to_string(per.size()), fixed6(mean_sorted(accs)),
                      std::to_string(static_cast<int>(*std::max_element(sizes.begin(), sizes.end()))),
                      std::to_string(static_cast<int>(*std::min_element(sizes.begin(), sizes.end()))), med});
  }
  return t;
}

Table voting_table(const std::vector<ResultRow>& rows) {
  std::map<int, std::map<int, std::vector<double>>> acc;  // attack -> scheme -> accuracies
  std::map<int, std::string> scheme_names;
  for (const auto& r : rows) {
    if (r.arch != ArchitectureKind::DCID) continue;
    const int so = scheme_order(r.scheme);
    acc[attack_order(r.attack)][so].push_back(r.accuracy);
    scheme_names[so] = r.scheme;
  }
  Table t;
  t.header = {"attack"};
  for (const auto& [so, name] : scheme_names) t.header.push_back(name);
  t.header.push_back("complete");
  for (const auto& [ai, by_scheme] : acc) {
    std::vector<std::string> row{std::string(to_string(kAllAttacks[ai]))};
    std::set<std::size_t> counts;
    for (const auto& [so, name] : scheme_names) {
      auto it = by_scheme.find(so);
      if (it == by_scheme.end()) {
        row.push_back("");
        counts.insert(0);
      } else {
        row.push_back(fixed6(mean_sorted(it->second)));
        counts.insert(it->second.size());
      }
    }
    // Every scheme should have been run on the same scenarios.
    row.push_back(counts.size() == 1 ? "yes" : "no");
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table tpr_fpr_table(const std::vector<ResultRow>& rows) {
  std::map<SeriesKey, std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>>> acc;
  for (const auto& r : rows) {
    const std::size_t n = r.id_nodes.size();
    if (n != 2 && n != 9) continue;
    auto& cell = acc[{r.arch, r.scheme, r.attack}][n];
    if (!std::isnan(r.tpr)) cell.first.push_back(r.tpr);
    if (!std::isnan(r.fpr)) cell.second.push_back(r.fpr);
  }
  Table t;
  t.header = {"arch", "scheme", "attack", "tpr_2", "fpr_2", "tpr_9", "fpr_9"};
  for (const auto& [k, by_n] : acc) {
    std::vector<std::string> row{std::string(to_string(k.arch)), display_scheme(k.scheme),
                                 std::string(to_string(k.attack))};
    for (std::size_t n : {2u, 9u}) {
      auto it = by_n.find(n);
      if (it == by_n.end()) {
        row.insert(row.end(), {"", ""});
      } else {
        row.push_back(fixed6(mean_sorted(it->second.first)));
        row.push_back(fixed6(mean_sorted(it->second.second)));
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void Heatmap::write_csv(std::ostream& os) const {
  os << "id_node";
  for (NodeId a : attackers) os << ",attacker_" << a;
  os << '\n';
  for (std::size_t i = 0; i < id_nodes.size(); ++i) {
    os << id_nodes[i];
    for (double c : cells[i]) os << ',' << fixed6(c);
    os << '\n';
  }
}

std::string Heatmap::render() const {
  static const char kShade[] = " .:-=+*#%@";
  std::ostringstream os;
  os << to_string(attack) << " (rows: ID node, columns: attacker; x = same node, ? = missing)\n";
  os << "     ";
  for (NodeId a : attackers) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%3u", static_cast<unsigned>(a));
    os << buf;
  }
  os << '\n';
  for (std::size_t i = 0; i < id_nodes.size(); ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%4u ", static_cast<unsigned>(id_nodes[i]));
    os << buf;
    for (std::size_t j = 0; j < attackers.size(); ++j) {
      const double c = cells[i][j];
      char ch;
      if (id_nodes[i] == attackers[j]) ch = 'x';
      else if (c < 0) ch = '?';
      else ch = kShade[std::min(9, static_cast<int>(c * 10))];
      os << "  " << ch;
    }
    os << '\n';
  }
  return os.str();
}

std::vector<Heatmap> heatmaps(const std::vector<ResultRow>& rows, const GridTopology& topo,
                              const std::vector<NodeId>& attackers) {
  auto by_level = [&](std::vector<NodeId> v) {
    std::sort(v.begin(), v.end(), [&](NodeId a, NodeId b) {
      return topo.level(a) != topo.level(b) ? topo.level(a) < topo.level(b) : a < b;
    });
    return v;
  };
  // attack -> (id, attacker) -> accuracies
  std::map<int, std::map<std::pair<NodeId, NodeId>, std::vector<double>>> acc;
  for (const auto& r : rows) {
    if (r.arch != ArchitectureKind::CIDwL || r.id_nodes.size() != 1) continue;
    acc[attack_order(r.attack)][{r.id_nodes[0], r.attacker}].push_back(r.accuracy);
  }
  std::vector<NodeId> ids;
  for (NodeId n = 0; n < topo.size(); ++n) ids.push_back(n);
  ids = by_level(ids);
  const auto cols = by_level(attackers);

  std::vector<Heatmap> out;
  for (const auto& [ai, cells] : acc) {
    Heatmap h;
    h.attack = kAllAttacks[ai];
    h.id_nodes = ids;
    h.attackers = cols;
    for (NodeId id : ids) {
      std::vector<double> row;
      for (NodeId a : cols) {
        if (id == a) {
          row.push_back(0.0);
          continue;
        }
        auto it = cells.find({id, a});
        if (it == cells.end()) {
          row.push_back(-1.0);
          ++h.missing;
        } else {
          row.push_back(mean_sorted(it->second));
        }
      }
      h.cells.push_back(std::move(row));
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace rplids
