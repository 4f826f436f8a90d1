#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <vector>

namespace perc {

struct VertexCoord {
  int x = 0;
  int y = 0;
  auto operator<=>(const VertexCoord&) const = default;
};

inline int max_norm(VertexCoord v) { return std::max(std::abs(v.x), std::abs(v.y)); }

inline bool adjacent(VertexCoord a, VertexCoord b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y) == 1;
}

enum class Orientation : std::uint8_t { horizontal = 0, vertical = 1 };

// Edge with canonical (lexicographically smaller) endpoint `lo`.
struct Edge {
  VertexCoord lo;
  Orientation orientation = Orientation::horizontal;

  VertexCoord hi() const {
    return orientation == Orientation::horizontal ? VertexCoord{lo.x + 1, lo.y}
                                                  : VertexCoord{lo.x, lo.y + 1};
  }
  static Edge between(VertexCoord a, VertexCoord b);  // throws usage if not adjacent
  auto operator<=>(const Edge&) const = default;
};

// Dual vertex (x, y) stands for the point (x + 1/2, y + 1/2).
struct DualVertex {
  int x = 0;
  int y = 0;
  auto operator<=>(const DualVertex&) const = default;
};

struct DualEdge {
  DualVertex lo;
  Orientation orientation = Orientation::horizontal;

  DualVertex hi() const {
    return orientation == Orientation::horizontal ? DualVertex{lo.x + 1, lo.y}
                                                  : DualVertex{lo.x, lo.y + 1};
  }
  auto operator<=>(const DualEdge&) const = default;
};

DualEdge dual_edge(const Edge& e);
Edge primal_edge(const DualEdge& d);

// Twice the max-norm of the point a dual vertex stands for.
inline int dual_norm2(DualVertex d) {
  return std::max(std::abs(2 * d.x + 1), std::abs(2 * d.y + 1));
}

// B(n) = [-n, n]^2 with row-major vertex and edge indexing.
class BoxRegion {
 public:
  BoxRegion() = default;
  explicit BoxRegion(int radius);

  int radius() const { return n_; }
  int side() const { return side_; }
  std::size_t vertex_count() const { return static_cast<std::size_t>(side_) * side_; }
  std::size_t edge_count() const { return 2 * static_cast<std::size_t>(side_) * (side_ - 1); }
  std::size_t edge_stride() const { return static_cast<std::size_t>(2 * side_ - 1); }

  bool contains(VertexCoord v) const { return std::abs(v.x) <= n_ && std::abs(v.y) <= n_; }
  bool contains(const Edge& e) const { return contains(e.lo) && contains(e.hi()); }
  bool on_boundary(VertexCoord v) const { return max_norm(v) == n_; }

  std::size_t vertex_index(VertexCoord v) const {
    return static_cast<std::size_t>(v.y + n_) * side_ + (v.x + n_);
  }
  VertexCoord vertex_at(std::size_t i) const {
    return {static_cast<int>(i % side_) - n_, static_cast<int>(i / side_) - n_};
  }

  // column/row are 0-based offsets from the lower-left corner
  std::size_t horizontal_edge(int col, int row) const {
    return static_cast<std::size_t>(row) * edge_stride() + col;
  }
  std::size_t vertical_edge(int col, int row) const {
    return static_cast<std::size_t>(row) * edge_stride() + (side_ - 1) + col;
  }
  std::size_t edge_index(const Edge& e) const;
  Edge edge_at(std::size_t idx) const;

  bool operator==(const BoxRegion& o) const { return n_ == o.n_; }

 private:
  int n_ = 0;
  int side_ = 1;
};

std::vector<Edge> enumerate_edges(const BoxRegion& box);

struct Annulus {
  int inner = 0;
  int outer = 1;
  Annulus(int m, int n);  // throws usage unless 0 <= m < n
};

bool annulus_membership(const Annulus& a, VertexCoord v);

struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::uint64_t attempt = 0;
  double p = 0.5;
  bool operator==(const Provenance&) const = default;
};

// One bit per edge of a box, indexed by BoxRegion::edge_index.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(const BoxRegion& region, bool all_open = false);

  const BoxRegion& region() const { return region_; }
  const Provenance& provenance() const { return provenance_; }
  void set_provenance(const Provenance& p) { provenance_ = p; }

  bool is_open(std::size_t idx) const { return (bits_[idx >> 6] >> (idx & 63)) & 1u; }
  bool is_open(const Edge& e) const { return is_open(region_.edge_index(e)); }
  void set_open(std::size_t idx, bool open) {
    const std::uint64_t m = std::uint64_t{1} << (idx & 63);
    if (open) bits_[idx >> 6] |= m; else bits_[idx >> 6] &= ~m;
  }
  void set_open(const Edge& e, bool open) { set_open(region_.edge_index(e), open); }
  void flip(std::size_t idx) { bits_[idx >> 6] ^= std::uint64_t{1} << (idx & 63); }

  std::size_t count_open() const;
  std::size_t edge_count() const { return region_.edge_count(); }

  // Same edge states on the smaller box B(r), r <= radius.
  Configuration restricted(int r) const;

  std::vector<std::uint64_t>& words() { return bits_; }
  const std::vector<std::uint64_t>& words() const { return bits_; }

  bool operator==(const Configuration& o) const {
    return region_ == o.region_ && bits_ == o.bits_;
  }

 private:
  BoxRegion region_;
  std::vector<std::uint64_t> bits_;
  Provenance provenance_;
};

// Largest radius the sampler's coordinate encoding supports.
inline constexpr int kMaxSampleRadius = 32766;

// Each edge is open with probability p from a Philox stream keyed by the seed
// and addressed by (global edge coordinates, attempt, replica). The state of
// an edge does not depend on the box, so samples on nested boxes are coupled.
Configuration sample_configuration(const BoxRegion& region, double p, std::uint64_t seed,
                                   std::uint64_t replica, std::uint64_t attempt = 0);
void resample(Configuration& config, double p, std::uint64_t seed, std::uint64_t replica,
              std::uint64_t attempt = 0);

}  // namespace perc
