#pragma once

#include <climits>
#include <cstdint>
#include <vector>

namespace perc {

// Planar grid graph with per-vertex link masks. Bit d of links[v] is the edge
// towards +x, -x, +y, -y for d = 0..3; masks must be symmetric.
struct GridGraph {
  enum : std::uint8_t { kActive = 1, kSource = 2, kSink = 4 };
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> links;
  std::vector<std::uint8_t> role;

  void reset(int w, int h) {
    width = w;
    height = h;
    links.assign(static_cast<std::size_t>(w) * h, 0);
    role.assign(static_cast<std::size_t>(w) * h, 0);
  }
  std::size_t size() const { return links.size(); }
  std::size_t neighbor(std::size_t v, int d) const {
    switch (d) {
      case 0: return v + 1;
      case 1: return v - 1;
      case 2: return v + static_cast<std::size_t>(width);
      default: return v - static_cast<std::size_t>(width);
    }
  }
  void link(std::size_t v, int d) {
    links[v] |= static_cast<std::uint8_t>(1u << d);
    links[neighbor(v, d)] |= static_cast<std::uint8_t>(1u << (d ^ 1));
  }
};

// Maximum number of vertex-disjoint source-to-sink paths (unit vertex
// capacities, Menger). Augmenting paths over the split graph, found by BFS.
class VertexDisjointFlow {
 public:
  int solve(const GridGraph& g, int limit = INT_MAX);

  // After solve: the vertex sequence of every path, source first.
  std::vector<std::vector<std::size_t>> paths(const GridGraph& g) const;

 private:
  bool augment(const GridGraph& g);

  std::vector<std::int32_t> prev_;
  std::vector<std::int32_t> next_;
  std::vector<std::int32_t> parent_;
  std::vector<std::uint32_t> seen_;
  std::uint32_t epoch_ = 0;
  std::vector<std::int32_t> queue_;
};

}  // namespace perc
