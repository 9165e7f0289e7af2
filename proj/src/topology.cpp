#include "rplids/topology.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>

#include "rplids/rng.hpp"

namespace rplids {

GridTopology GridTopology::build(int cols, int rows, double spacing, double tx_range) {
  if (cols <= 0 || rows <= 0) throw std::invalid_argument("grid dimensions must be positive");
  if (cols * rows < 2) throw std::invalid_argument("grid needs at least two nodes");
  if (!(spacing > 0)) throw std::invalid_argument("spacing must be positive");
  if (!(tx_range > 0)) throw std::invalid_argument("tx_range must be positive");

  GridTopology t;
  t.cols_ = cols;
  t.rows_ = rows;
  t.spacing_ = spacing;
  t.tx_range_ = tx_range;
  const auto n = static_cast<std::size_t>(cols * rows);
  t.positions_.reserve(n);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) t.positions_.push_back({c * spacing, r * spacing});

  t.neighbors_.assign(n, {});
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = 0; b < n; ++b)
      if (a != b && t.in_range(a, b)) t.neighbors_[a].push_back(b);

  t.levels_ = t.bfs(kRootId);
  for (NodeId a = 0; a < n; ++a)
    if (t.levels_[a] < 0) throw std::invalid_argument("topology is disconnected: tx_range too short for spacing");
  return t;
}

const Position& GridTopology::position(NodeId n) const {
  if (!contains(n)) throw std::out_of_range("unknown node id " + std::to_string(n));
  return positions_[n];
}

const std::vector<NodeId>& GridTopology::neighbors(NodeId n) const {
  if (!contains(n)) throw std::out_of_range("unknown node id " + std::to_string(n));
  return neighbors_[n];
}

bool GridTopology::in_range(NodeId a, NodeId b) const {
  const auto& pa = position(a);
  const auto& pb = position(b);
  return std::hypot(pa.x - pb.x, pa.y - pb.y) <= tx_range_;
}

std::vector<int> GridTopology::bfs(NodeId from) const {
  std::vector<int> dist(positions_.size(), -1);
  std::deque<NodeId> queue{from};
  dist[from] = 0;
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : neighbors_[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  return dist;
}

int GridTopology::hop_distance(NodeId a, NodeId b) const {
  if (!contains(a) || !contains(b)) throw std::out_of_range("unknown node id");
  return bfs(a)[b];
}

std::uint64_t GridTopology::digest() const {
  std::uint64_t h = derive_seed(0x746f706fULL, cols_, rows_);
  for (const auto& p : positions_) {
    h = derive_seed(h, static_cast<std::uint64_t>(std::llround(p.x * 1000)), static_cast<std::uint64_t>(std::llround(p.y * 1000)));
  }
  return derive_seed(h, static_cast<std::uint64_t>(std::llround(tx_range_ * 1000)));
}

std::string GridTopology::dump() const {
  std::string out = "id,x,y,level\n";
  char buf[96];
  for (NodeId n = 0; n < positions_.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%u,%g,%g,%d\n", n, positions_[n].x, positions_[n].y, levels_[n]);
    out += buf;
  }
  return out;
}

}  // namespace rplids
