#include "perclab/clusters.hpp"

#include "perclab/error.hpp"
#include "perclab/union_find.hpp"

namespace perc {

ClusterLabeling::ClusterLabeling(const Configuration& config, const BoxRegion& region)
    : region_(region) {
  if (region.radius() > config.region().radius())
    throw Error(ErrorCode::usage, "labeling region exceeds configuration box");
  const Configuration local =
      region == config.region() ? Configuration() : config.restricted(region.radius());
  const Configuration& c = region == config.region() ? config : local;

  const std::size_t V = region.vertex_count();
  DisjointSet ds(V);
  const int L = region.side();
  for (int row = 0; row < L; ++row) {
    for (int col = 0; col < L; ++col) {
      const std::size_t v = static_cast<std::size_t>(row) * L + col;
      if (col + 1 < L && c.is_open(region.horizontal_edge(col, row)))
        ds.unite(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v + 1));
      if (row + 1 < L && c.is_open(region.vertical_edge(col, row)))
        ds.unite(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v + L));
    }
  }
  constexpr std::uint32_t kUnset = ~0u;
  std::vector<std::uint32_t> root_label(V, kUnset);
  labels_.resize(V);
  for (std::size_t v = 0; v < V; ++v) {
    const std::uint32_t r = ds.find(static_cast<std::uint32_t>(v));
    if (root_label[r] == kUnset) {
      root_label[r] = static_cast<std::uint32_t>(sizes_.size());
      sizes_.push_back(0);
      reach_.push_back(0);
    }
    const std::uint32_t id = root_label[r];
    labels_[v] = id;
    ++sizes_[id];
    reach_[id] = std::max(reach_[id], max_norm(region.vertex_at(v)));
  }
}

std::vector<std::size_t> ClusterLabeling::members(std::uint32_t id) const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < labels_.size(); ++v)
    if (labels_[v] == id) out.push_back(v);
  return out;
}

bool connected(const ClusterLabeling& labeling, VertexCoord u, VertexCoord v) {
  return labeling.label(u) == labeling.label(v);
}

bool reaches_box_boundary(const ClusterLabeling& labeling, VertexCoord v, int n) {
  if (max_norm(v) > n || n > labeling.region().radius())
    throw Error(ErrorCode::usage, "vertex or scale outside the labeled region");
  // norms change by at most one per step, so reaching norm >= n from inside
  // B(n) passes through the boundary
  return labeling.reach(labeling.label(v)) >= n;
}

void ClusterExplorer::prepare(std::size_t vertices) {
  if (seen_.size() != vertices) {
    seen_.assign(vertices, 0);
    mark_.assign(vertices, 0);
    epoch_ = 0;
  }
  if (++epoch_ == 0) {
    std::fill(seen_.begin(), seen_.end(), 0);
    epoch_ = 1;
  }
}

OriginCluster ClusterExplorer::explore_origin(const Configuration& config, int n) {
  const BoxRegion& box = config.region();
  prepare(box.vertex_count());
  const int R = box.radius();
  const int L = box.side();
  const std::uint32_t origin = static_cast<std::uint32_t>(box.vertex_index({0, 0}));
  stack_.clear();
  stack_.push_back(origin);
  seen_[origin] = epoch_;
  OriginCluster out;
  for (std::size_t head = 0; head < stack_.size(); ++head) {
    const std::uint32_t v = stack_[head];
    const int x = static_cast<int>(v % static_cast<std::uint32_t>(L)) - R;
    const int y = static_cast<int>(v / static_cast<std::uint32_t>(L)) - R;
    const int r = std::max(std::abs(x), std::abs(y));
    if (r <= n) ++out.inner_count;
    if (r > out.reach) out.reach = r;
    for_each_open_neighbor(config, v, [&](std::size_t w, std::size_t) {
      if (seen_[w] != epoch_) {
        seen_[w] = epoch_;
        stack_.push_back(static_cast<std::uint32_t>(w));
      }
    });
  }
  out.size = stack_.size();
  return out;
}

std::uint64_t ClusterExplorer::count_wired(const Configuration& config, int n) {
  const BoxRegion& box = config.region();
  const int R = box.radius();
  if (n > R) throw Error(ErrorCode::usage, "inner scale exceeds configuration box");
  const int L = box.side();
  // mark_: 0 unknown, 1 wired to the boundary, 2 cluster exhausted without reaching it
  prepare(box.vertex_count());
  std::fill(mark_.begin(), mark_.end(), 0);
  std::uint64_t count = 0;
  for (int y = -n; y <= n; ++y) {
    for (int x = -n; x <= n; ++x) {
      const std::uint32_t s = static_cast<std::uint32_t>(box.vertex_index({x, y}));
      if (mark_[s] == 0) {
        if (++epoch_ == 0) {
          std::fill(seen_.begin(), seen_.end(), 0);
          epoch_ = 1;
        }
        stack_.clear();
        work_.clear();
        work_.push_back(s);
        seen_[s] = epoch_;
        bool wired = false;
        while (!work_.empty() && !wired) {
          const std::uint32_t v = work_.back();
          work_.pop_back();
          stack_.push_back(v);
          const int vx = static_cast<int>(v % static_cast<std::uint32_t>(L)) - R;
          const int vy = static_cast<int>(v / static_cast<std::uint32_t>(L)) - R;
          if (std::max(std::abs(vx), std::abs(vy)) == R || mark_[v] == 1) {
            wired = true;
            break;
          }
          for_each_open_neighbor(config, v, [&](std::size_t w, std::size_t) {
            if (seen_[w] != epoch_) {
              seen_[w] = epoch_;
              work_.push_back(static_cast<std::uint32_t>(w));
            }
          });
        }
        const std::uint8_t m = wired ? 1 : 2;
        for (std::uint32_t v : stack_) mark_[v] = m;
        // pending vertices are in the same cluster too
        if (wired)
          for (std::uint32_t v : work_) mark_[v] = 1;
      }
      if (mark_[s] == 1) ++count;
    }
  }
  return count;
}

std::optional<ObservableSample> observable_T(ClusterExplorer& ex, const Configuration& config, int n) {
  const int m = config.region().radius();
  if (n < 0 || n > m) throw Error(ErrorCode::usage, "observable_T needs 0 <= n <= m");
  const OriginCluster oc = ex.explore_origin(config, n);
  if (oc.reach < m) return std::nullopt;
  return ObservableSample{ObservableKind::T, oc.inner_count, n, m};
}

ObservableSample observable_S(ClusterExplorer& ex, const Configuration& config, int n) {
  if (n < 0 || 2 * n > config.region().radius())
    throw Error(ErrorCode::usage, "observable_S needs a configuration on B(2n)");
  // S_n is defined on B(2n); a larger box is restricted first
  if (config.region().radius() != 2 * n) return observable_S(ex, config.restricted(2 * n), n);
  return ObservableSample{ObservableKind::S, ex.count_wired(config, n), n, 2 * n};
}

std::optional<ObservableSample> observable_T(const Configuration& config, int n) {
  ClusterExplorer ex;
  return observable_T(ex, config, n);
}

ObservableSample observable_S(const Configuration& config, int n) {
  ClusterExplorer ex;
  return observable_S(ex, config, n);
}

}  // namespace perc
