#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "perclab/lattice.hpp"

namespace perc {

// Calls f(neighbour_index, edge_index) for each open edge at vertex vi.
template <class F>
inline void for_each_open_neighbor(const Configuration& c, std::size_t vi, F&& f) {
  const BoxRegion& b = c.region();
  const int L = b.side();
  const int col = static_cast<int>(vi % static_cast<std::size_t>(L));
  const int row = static_cast<int>(vi / static_cast<std::size_t>(L));
  if (col + 1 < L) {
    const std::size_t e = b.horizontal_edge(col, row);
    if (c.is_open(e)) f(vi + 1, e);
  }
  if (col > 0) {
    const std::size_t e = b.horizontal_edge(col - 1, row);
    if (c.is_open(e)) f(vi - 1, e);
  }
  if (row + 1 < L) {
    const std::size_t e = b.vertical_edge(col, row);
    if (c.is_open(e)) f(vi + L, e);
  }
  if (row > 0) {
    const std::size_t e = b.vertical_edge(col, row - 1);
    if (c.is_open(e)) f(vi - L, e);
  }
}

inline int max_norm_of_index(const BoxRegion& b, std::size_t vi) {
  return max_norm(b.vertex_at(vi));
}

class ClusterLabeling {
 public:
  // region must be contained in config.region()
  ClusterLabeling(const Configuration& config, const BoxRegion& region);
  explicit ClusterLabeling(const Configuration& config)
      : ClusterLabeling(config, config.region()) {}

  const BoxRegion& region() const { return region_; }
  std::size_t cluster_count() const { return sizes_.size(); }
  std::uint32_t label(VertexCoord v) const { return labels_[region_.vertex_index(v)]; }
  std::uint32_t label_at(std::size_t vi) const { return labels_[vi]; }
  std::uint32_t size(std::uint32_t id) const { return sizes_[id]; }
  // largest max-norm over the cluster's vertices
  int reach(std::uint32_t id) const { return reach_[id]; }
  bool touches_box_boundary(std::uint32_t id, int n) const { return reach_[id] >= n; }
  std::vector<std::size_t> members(std::uint32_t id) const;

 private:
  BoxRegion region_;
  std::vector<std::uint32_t> labels_;
  std::vector<std::uint32_t> sizes_;
  std::vector<int> reach_;
};

bool connected(const ClusterLabeling& labeling, VertexCoord u, VertexCoord v);
// v in B(n), B(n) inside the labeled region
bool reaches_box_boundary(const ClusterLabeling& labeling, VertexCoord v, int n);

enum class ObservableKind { T, S };

struct ObservableSample {
  ObservableKind kind = ObservableKind::T;
  std::uint64_t value = 0;
  int n = 0;
  int m = 0;
};

struct OriginCluster {
  std::uint64_t size = 0;        // vertices in the whole box
  std::uint64_t inner_count = 0; // vertices with max-norm <= n
  int reach = 0;
};

// Reusable scratch for repeated searches on boxes of one size.
class ClusterExplorer {
 public:
  // Explores C(0) fully.
  OriginCluster explore_origin(const Configuration& config, int n);
  // Vertices of B(n) wired to the boundary of the config's box.
  std::uint64_t count_wired(const Configuration& config, int n);
  // Vertex indices of the last explore_origin call.
  const std::vector<std::uint32_t>& last_cluster() const { return stack_; }

 private:
  void prepare(std::size_t vertices);
  std::vector<std::uint32_t> seen_;
  std::uint32_t epoch_ = 0;
  std::vector<std::uint32_t> stack_;
  std::vector<std::uint32_t> work_;
  std::vector<std::uint8_t> mark_;
};

// Unset result means the origin does not reach the box boundary.
std::optional<ObservableSample> observable_T(const Configuration& config, int n);
ObservableSample observable_S(const Configuration& config, int n);

std::optional<ObservableSample> observable_T(ClusterExplorer& ex, const Configuration& config, int n);
ObservableSample observable_S(ClusterExplorer& ex, const Configuration& config, int n);

}  // namespace perc
