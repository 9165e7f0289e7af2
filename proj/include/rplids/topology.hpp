// Grid deployment and unit-disk neighbourhoods.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rplids/types.hpp"

namespace rplids {

struct Position {
  double x = 0;
  double y = 0;
};

/// Immutable cols x rows lattice. Node ids are row-major starting from the
/// root corner: id = row * cols + col, position = (col * spacing, row * spacing).
class GridTopology {
 public:
  /// Throws std::invalid_argument on non-positive dimensions or a
  /// disconnected unit-disk graph.
  static GridTopology build(int cols, int rows, double spacing, double tx_range);

  std::size_t size() const { return positions_.size(); }
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  double spacing() const { return spacing_; }
  double tx_range() const { return tx_range_; }
  double area_width() const { return spacing_ * (cols_ - 1); }
  double area_height() const { return spacing_ * (rows_ - 1); }

  bool contains(NodeId n) const { return n < positions_.size(); }
  const Position& position(NodeId n) const;

  /// Sorted ids within Euclidean distance <= tx_range, excluding n.
  const std::vector<NodeId>& neighbors(NodeId n) const;
  bool in_range(NodeId a, NodeId b) const;

  /// Hop count over the unit-disk graph.
  int hop_distance(NodeId a, NodeId b) const;
  /// Hop distance from the root for every node.
  const std::vector<int>& levels() const { return levels_; }
  int level(NodeId n) const { return levels_.at(n); }

  /// Content hash over dimensions and positions.
  std::uint64_t digest() const;

  /// `id,x,y,level` table with header.
  std::string dump() const;

 private:
  GridTopology() = default;
  std::vector<int> bfs(NodeId from) const;

  int cols_ = 0;
  int rows_ = 0;
  double spacing_ = 0;
  double tx_range_ = 0;
  std::vector<Position> positions_;
  std::vector<std::vector<NodeId>> neighbors_;
  std::vector<int> levels_;
};

/// Free-function forms of the topology operations.
inline GridTopology build_grid(int cols, int rows, double spacing, double tx_range) {
  return GridTopology::build(cols, rows, spacing, tx_range);
}

inline const std::vector<NodeId>& neighbors(const GridTopology& topo, NodeId n) { return topo.neighbors(n); }

}  // namespace rplids
