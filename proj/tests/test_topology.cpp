#include <cmath>

#include "doctest.h"
#include "rplids/topology.hpp"

using namespace rplids;

namespace {

// Brute-force oracle: ids within Euclidean range, straight from coordinates.
std::vector<NodeId> neighbours_by_distance(int cols, int rows, double spacing, double range, NodeId n) {
  std::vector<NodeId> out;
  const double nx = (n % cols) * spacing, ny = (n / cols) * spacing;
  for (int i = 0; i < cols * rows; ++i) {
    if (static_cast<NodeId>(i) == n) continue;
    const double dx = (i % cols) * spacing - nx, dy = (i / cols) * spacing - ny;
    if (std::sqrt(dx * dx + dy * dy) <= range) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

}  // namespace

TEST_CASE("6x5 grid at 20 m spans 100 x 80") {
  auto t = build_grid(6, 5, 20, 25);
  CHECK(t.size() == 30);
  CHECK(t.area_width() == 100);
  CHECK(t.area_height() == 80);
  CHECK(t.position(0).x == 0);
  CHECK(t.position(0).y == 0);
  CHECK(t.position(29).x == 100);
  CHECK(t.position(29).y == 80);
}

TEST_CASE("two-node grid has one link") {
  auto t = build_grid(1, 2, 20, 25);
  CHECK(t.size() == 2);
  CHECK(t.neighbors(0) == std::vector<NodeId>{1});
  CHECK(t.neighbors(1) == std::vector<NodeId>{0});
}

TEST_CASE("range below spacing is rejected as disconnected") {
  CHECK_THROWS_AS(build_grid(6, 5, 20, 19), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(0, 5, 20, 25), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(6, 5, -1, 25), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(6, 5, 20, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, 1, 20, 25), std::invalid_argument);
}

TEST_CASE("neighbour sets match the distance oracle") {
  auto t = build_grid(6, 5, 20, 25);
  CHECK(t.neighbors(0).size() == 2);   // corner
  CHECK(t.neighbors(7).size() == 4);   // interior
  CHECK(t.neighbors(2).size() == 3);   // edge
  for (NodeId n = 0; n < t.size(); ++n) {
    CHECK(t.neighbors(n) == neighbours_by_distance(6, 5, 20, 25, n));
    for (NodeId m : t.neighbors(n)) {
      CHECK(m != n);
      const auto& back = t.neighbors(m);
      CHECK(std::find(back.begin(), back.end(), n) != back.end());
    }
  }
  CHECK_THROWS(t.neighbors(30));
}

TEST_CASE("4-adjacency: neighbour count equals lattice cell count") {
  auto t = build_grid(6, 5, 20, 25);
  for (NodeId n = 0; n < t.size(); ++n) {
    const int c = n % 6, r = n / 6;
    const int adj = (c > 0) + (c < 5) + (r > 0) + (r < 4);
    CHECK(static_cast<int>(t.neighbors(n).size()) == adj);
  }
}

TEST_CASE("levels are hop distances from the corner root; ten levels") {
  auto t = build_grid(6, 5, 20, 25);
  int max_level = 0;
  for (NodeId n = 0; n < t.size(); ++n) {
    CHECK(t.level(n) == static_cast<int>(n % 6 + n / 6));
    max_level = std::max(max_level, t.level(n));
  }
  CHECK(max_level + 1 == 10);
  CHECK(t.hop_distance(5, 24) == 9);
  CHECK(t.hop_distance(13, 13) == 0);
}

TEST_CASE("construction is deterministic") {
  auto a = build_grid(6, 5, 20, 25), b = build_grid(6, 5, 20, 25);
  CHECK(a.digest() == b.digest());
  CHECK(a.dump() == b.dump());
  CHECK(a.digest() != build_grid(5, 6, 20, 25).digest());
}

TEST_CASE("dump is id,x,y,level") {
  auto t = build_grid(6, 5, 20, 25);
  const auto d = t.dump();
  CHECK(d.rfind("id,x,y,level\n", 0) == 0);
  CHECK(d.find("\n13,20,40,3\n") != std::string::npos);
  CHECK(std::count(d.begin(), d.end(), '\n') == 31);
}
