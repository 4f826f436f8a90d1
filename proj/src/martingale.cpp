#include "perclab/martingale.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "perclab/error.hpp"
#include "perclab/rng.hpp"

namespace perc {

namespace {

// Lattice step from vertex v in direction d (+x, -x, +y, -y); false at the box edge.
inline bool step(const BoxRegion& b, std::size_t v, int d, std::size_t& w, std::size_t& e) {
  const int L = b.side();
  const int col = static_cast<int>(v % static_cast<std::size_t>(L));
  const int row = static_cast<int>(v / static_cast<std::size_t>(L));
  switch (d) {
    case 0:
      if (col + 1 >= L) return false;
      w = v + 1;
      e = b.horizontal_edge(col, row);
      return true;
    case 1:
      if (col == 0) return false;
      w = v - 1;
      e = b.horizontal_edge(col - 1, row);
      return true;
    case 2:
      if (row + 1 >= L) return false;
      w = v + L;
      e = b.vertical_edge(col, row);
      return true;
    default:
      if (row == 0) return false;
      w = v - L;
      e = b.vertical_edge(col, row - 1);
      return true;
  }
}

// Open cluster of `start` with edge `skip` treated as closed.
std::vector<std::uint8_t> cluster_mask(const Configuration& c, std::size_t start, std::size_t skip) {
  const BoxRegion& b = c.region();
  std::vector<std::uint8_t> mask(b.vertex_count(), 0);
  std::vector<std::size_t> stack{start};
  mask[start] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (int d = 0; d < 4; ++d) {
      std::size_t w, e;
      if (!step(b, v, d, w, e) || e == skip || !c.is_open(e) || mask[w]) continue;
      mask[w] = 1;
      stack.push_back(w);
    }
  }
  return mask;
}

// Fills the complement of A reachable from `seed`; vertices of norm n are next
// to the outside of the box. If the outside is reached, everything connected
// to it is flooded too and the unflooded vertices (A and its holes) are
// returned. Unset when seed is enclosed by A.
std::optional<std::vector<std::uint8_t>> fill_region(const BoxRegion& b, const std::vector<std::uint8_t>& in_a,
                                                     std::optional<std::size_t> seed) {
  const std::size_t V = b.vertex_count();
  const int n = b.radius();
  std::vector<std::uint8_t> flooded(V, 0);
  std::vector<std::size_t> stack;
  auto push = [&](std::size_t v) {
    if (!in_a[v] && !flooded[v]) {
      flooded[v] = 1;
      stack.push_back(v);
    }
  };
  auto drain = [&](bool& outside) {
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (max_norm(b.vertex_at(v)) == n) outside = true;
      for (int d = 0; d < 4; ++d) {
        std::size_t w, e;
        if (step(b, v, d, w, e)) push(w);
      }
    }
  };
  bool outside = false;
  if (seed) {
    push(*seed);
    drain(outside);
    if (!outside) return std::nullopt;
  }
  for (std::size_t v = 0; v < V; ++v)
    if (max_norm(b.vertex_at(v)) == n) push(v);
  drain(outside);
  std::vector<std::uint8_t> filled(V, 0);
  for (std::size_t v = 0; v < V; ++v) filled[v] = !flooded[v];
  return filled;
}

std::vector<std::size_t> indices_of(const std::vector<std::uint8_t>& mask) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < mask.size(); ++v)
    if (mask[v]) out.push_back(v);
  return out;
}

PivotalRecord make_record(const Configuration& c, std::size_t ei, std::size_t vp, std::size_t vs,
                          const std::vector<std::uint8_t>& a_mask) {
  const BoxRegion& b = c.region();
  PivotalRecord r;
  r.edge = b.edge_at(ei);
  r.edge_index = ei;
  r.edge_open = c.is_open(ei);
  r.v_prime = b.vertex_at(vp);
  r.v_second = b.vertex_at(vs);
  r.cluster = indices_of(a_mask);
  for (std::size_t v : r.cluster) r.cluster_reach = std::max(r.cluster_reach, max_norm(b.vertex_at(v)));
  const auto filled = fill_region(b, a_mask, vs);
  if (filled) {
    r.contour_exists = true;
    r.filled = indices_of(*filled);
    r.contour = boundary_circuit(b, *filled, dual_edge(r.edge));
  }
  return r;
}

long long signed_area2(const std::vector<DualVertex>& vs) {
  long long a = 0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const DualVertex& p = vs[i];
    const DualVertex& q = vs[(i + 1) % vs.size()];
    a += static_cast<long long>(p.x) * q.y - static_cast<long long>(q.x) * p.y;
  }
  return a;
}

}  // namespace

DualCircuit boundary_circuit(const BoxRegion& box, const std::vector<std::uint8_t>& inside,
                             std::optional<DualEdge> start) {
  const int n = box.radius();
  const int D = 2 * n + 2;  // dual vertices x, y in [-n-1, n]
  auto dual_index = [&](DualVertex d) {
    return static_cast<std::size_t>(d.y + n + 1) * D + (d.x + n + 1);
  };
  std::vector<DualEdge> edges;
  bool uses_boundary = false;
  for (std::size_t v = 0; v < inside.size(); ++v) {
    if (!inside[v]) continue;
    const VertexCoord p = box.vertex_at(v);
    const VertexCoord nb[4] = {{p.x + 1, p.y}, {p.x - 1, p.y}, {p.x, p.y + 1}, {p.x, p.y - 1}};
    for (const VertexCoord& q : nb) {
      const bool out_of_box = !box.contains(q);
      if (!out_of_box && inside[box.vertex_index(q)]) continue;
      uses_boundary |= out_of_box;
      edges.push_back(dual_edge(Edge::between(p, q)));
    }
  }
  if (edges.empty()) throw Error(ErrorCode::invariant, "empty region has no boundary circuit");
  std::vector<std::array<std::int32_t, 4>> incident(static_cast<std::size_t>(D) * D);
  std::vector<std::uint8_t> degree(static_cast<std::size_t>(D) * D, 0);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (DualVertex d : {edges[i].lo, edges[i].hi()}) {
      const std::size_t k = dual_index(d);
      incident[k][degree[k]++] = static_cast<std::int32_t>(i);
    }
  }
  for (std::size_t k = 0; k < degree.size(); ++k)
    if (degree[k] != 0 && degree[k] != 2)
      throw Error(ErrorCode::invariant, "region boundary is not a simple circuit");

  std::size_t first = 0;
  if (start) {
    const auto it = std::find(edges.begin(), edges.end(), *start);
    if (it == edges.end()) throw Error(ErrorCode::invariant, "start edge is not on the boundary");
    first = static_cast<std::size_t>(it - edges.begin());
  }
  auto walk = [&](DualVertex from, DualVertex to) {
    DualCircuit c;
    c.uses_box_boundary = uses_boundary;
    c.vertices.push_back(from);
    c.edges.push_back(edges[first]);
    std::size_t prev = first;
    DualVertex cur = to;
    while (!(cur == from)) {
      c.vertices.push_back(cur);
      const std::size_t k = dual_index(cur);
      const std::size_t next =
          static_cast<std::size_t>(incident[k][0]) == prev ? incident[k][1] : incident[k][0];
      c.edges.push_back(edges[next]);
      cur = edges[next].lo == cur ? edges[next].hi() : edges[next].lo;
      prev = next;
      if (c.edges.size() > edges.size()) break;
    }
    return c;
  };
  DualCircuit c = walk(edges[first].lo, edges[first].hi());
  if (c.edges.size() != edges.size())
    throw Error(ErrorCode::invariant, "region boundary splits into several circuits");
  if (signed_area2(c.vertices) < 0) c = walk(edges[first].hi(), edges[first].lo);
  return c;
}

DualCircuit exterior_boundary(const ClusterLabeling& labeling, std::uint32_t cluster_id, int n) {
  if (n != labeling.region().radius())
    throw Error(ErrorCode::usage, "exterior_boundary expects a labeling of B(n)");
  if (labeling.touches_box_boundary(cluster_id, n))
    throw Error(ErrorCode::cluster_touches_boundary, "cluster reaches the boundary of B(n)");
  const BoxRegion& b = labeling.region();
  std::vector<std::uint8_t> in_a(b.vertex_count(), 0);
  for (std::size_t v = 0; v < in_a.size(); ++v) in_a[v] = labeling.label_at(v) == cluster_id;
  const auto filled = fill_region(b, in_a, std::nullopt);
  return boundary_circuit(b, *filled);
}

std::optional<PivotalRecord> is_pivotal(const Configuration& config, const Edge& e) {
  const BoxRegion& b = config.region();
  if (!b.contains(e)) throw Error(ErrorCode::usage, "edge outside the box");
  const std::size_t ei = b.edge_index(e);
  const auto origin = cluster_mask(config, b.vertex_index({0, 0}), ei);
  const std::size_t u = b.vertex_index(e.lo), w = b.vertex_index(e.hi());
  if (origin[u] == origin[w]) return std::nullopt;
  const std::size_t vp = origin[u] ? w : u;
  const std::size_t vs = origin[u] ? u : w;
  return make_record(config, ei, vp, vs, cluster_mask(config, vp, ei));
}

std::optional<PivotalRecord> is_pivotal(const Configuration& config, const Edge& e, int n) {
  if (n == config.region().radius()) return is_pivotal(config, e);
  return is_pivotal(config.restricted(n), e);
}

PivotalScanner::PivotalScanner(const Configuration& config)
    : config_(config), label_(config), origin_label_(label_.label({0, 0})) {
  const BoxRegion& b = config.region();
  const std::size_t V = b.vertex_count();
  bridge_child_.assign(b.edge_count(), -1);
  subtree_size_.assign(V, 0);
  subtree_reach_.assign(V, 0);
  std::vector<std::int32_t> disc(V, -1), low(V, 0);
  struct Frame {
    std::size_t v;
    std::size_t parent_edge;
    int dir;
  };
  std::vector<Frame> stack;
  const std::size_t root = b.vertex_index({0, 0});
  std::int32_t timer = 0;
  disc[root] = low[root] = timer++;
  subtree_size_[root] = 1;
  stack.push_back({root, SIZE_MAX, 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.dir < 4) {
      const int d = f.dir++;
      std::size_t w, e;
      if (!step(b, f.v, d, w, e) || !config.is_open(e) || e == f.parent_edge) continue;
      if (disc[w] >= 0) {
        low[f.v] = std::min(low[f.v], disc[w]);
      } else {
        disc[w] = low[w] = timer++;
        subtree_size_[w] = 1;
        subtree_reach_[w] = max_norm(b.vertex_at(w));
        stack.push_back({w, e, 0});
      }
      continue;
    }
    const Frame done = f;
    stack.pop_back();
    if (stack.empty()) break;
    Frame& parent = stack.back();
    low[parent.v] = std::min(low[parent.v], low[done.v]);
    subtree_size_[parent.v] += subtree_size_[done.v];
    subtree_reach_[parent.v] = std::max(subtree_reach_[parent.v], subtree_reach_[done.v]);
    if (low[done.v] > disc[parent.v]) bridge_child_[done.parent_edge] = static_cast<std::int32_t>(done.v);
  }
}

PivotalScanner::Quick PivotalScanner::classify(std::size_t ei) const {
  const BoxRegion& b = config_.region();
  const Edge e = b.edge_at(ei);
  const std::size_t u = b.vertex_index(e.lo), w = b.vertex_index(e.hi());
  Quick q;
  if (config_.is_open(ei)) {
    const std::int32_t child = bridge_child_[ei];
    if (child < 0) return q;
    q.pivotal = true;
    q.v_prime = static_cast<std::size_t>(child);
    q.v_second = q.v_prime == u ? w : u;
    q.cluster_size = subtree_size_[q.v_prime];
    q.cluster_reach = subtree_reach_[q.v_prime];
    return q;
  }
  const bool iu = in_origin_cluster(u), iw = in_origin_cluster(w);
  if (iu == iw) return q;
  q.pivotal = true;
  q.v_prime = iu ? w : u;
  q.v_second = iu ? u : w;
  const std::uint32_t id = label_.label_at(q.v_prime);
  q.cluster_size = label_.size(id);
  q.cluster_reach = label_.reach(id);
  return q;
}

PivotalRecord PivotalScanner::record(std::size_t ei) const {
  const Quick q = classify(ei);
  if (!q.pivotal) throw Error(ErrorCode::usage, "edge is not pivotal");
  return make_record(config_, ei, q.v_prime, q.v_second, cluster_mask(config_, q.v_prime, ei));
}

double h_epsilon_threshold(int n, double epsilon) {
  return std::pow(static_cast<double>(n), 2.0 - 5.0 / 48.0 - epsilon);
}

std::vector<HEpsilonHit> detect_H_epsilon(const Configuration& config, double epsilon) {
  if (!(epsilon > 0)) throw Error(ErrorCode::usage, "epsilon must be positive");
  const int n = config.region().radius();
  const double threshold = h_epsilon_threshold(n, epsilon);
  PivotalScanner scan(config);
  std::vector<HEpsilonHit> hits;
  for (std::size_t ei = 0; ei < config.edge_count(); ++ei) {
    const auto q = scan.classify(ei);
    if (!q.pivotal || q.cluster_reach >= n || static_cast<double>(q.cluster_size) < threshold) continue;
    // v'' lies in the origin cluster; when that cluster reaches the boundary
    // it cannot be enclosed by the cluster of v'
    if (scan.origin_reach() < n && !scan.record(ei).contour_exists) continue;
    hits.push_back({ei, config.is_open(ei), q.cluster_size});
  }
  return hits;
}

std::vector<HEpsilonHit> detect_H_epsilon_naive(const Configuration& config, double epsilon) {
  if (!(epsilon > 0)) throw Error(ErrorCode::usage, "epsilon must be positive");
  const BoxRegion& b = config.region();
  const double threshold = h_epsilon_threshold(b.radius(), epsilon);
  std::vector<HEpsilonHit> hits;
  for (std::size_t ei = 0; ei < config.edge_count(); ++ei) {
    const auto r = is_pivotal(config, b.edge_at(ei));
    if (!r || !r->contour_exists || r->contour.uses_box_boundary) continue;
    if (static_cast<double>(r->cluster.size()) < threshold) continue;
    hits.push_back({ei, r->edge_open, r->cluster.size()});
  }
  return hits;
}

std::optional<std::size_t> h_epsilon_involution_failure(const Configuration& config, double epsilon) {
  const int n = config.region().radius();
  ClusterExplorer ex;
  const bool cond = ex.explore_origin(config, n).reach >= n;
  for (const auto& h : detect_H_epsilon(config, epsilon)) {
    Configuration flipped = config;
    flipped.flip(h.edge_index);
    if ((ex.explore_origin(flipped, n).reach >= n) != cond) return h.edge_index;
    const auto other = detect_H_epsilon(flipped, epsilon);
    const bool found = std::any_of(other.begin(), other.end(), [&](const HEpsilonHit& o) {
      return o.edge_index == h.edge_index && o.cluster_size == h.cluster_size;
    });
    if (!found) return h.edge_index;
  }
  return std::nullopt;
}

std::vector<std::size_t> spiral_edge_order(int n) {
  if (n < 1) throw Error(ErrorCode::usage, "spiral order needs n >= 1");
  const BoxRegion b(n);
  std::vector<std::uint8_t> emitted(b.edge_count(), 0);
  std::vector<std::size_t> order;
  order.reserve(b.edge_count());
  for (int s = 1; s <= n; ++s) {
    std::vector<VertexCoord> ring;
    for (int y = 0; y <= s; ++y) ring.push_back({s, y});
    for (int x = s - 1; x >= -s; --x) ring.push_back({x, s});
    for (int y = s - 1; y >= -s; --y) ring.push_back({-s, y});
    for (int x = -s + 1; x <= s; ++x) ring.push_back({x, -s});
    for (int y = -s + 1; y <= -1; ++y) ring.push_back({s, y});
    for (const VertexCoord& v : ring) {
      const VertexCoord horiz[2] = {{v.x - 1, v.y}, {v.x + 1, v.y}};  // sorted by x
      const VertexCoord vert[2] = {{v.x, v.y - 1}, {v.x, v.y + 1}};   // sorted by y
      for (const auto* group : {horiz, vert}) {
        for (int i = 0; i < 2; ++i) {
          const VertexCoord w = group[i];
          if (max_norm(w) > s) continue;
          const std::size_t ei = b.edge_index(Edge::between(v, w));
          if (emitted[ei]) continue;
          emitted[ei] = 1;
          order.push_back(ei);
        }
      }
    }
  }
  return order;
}

std::size_t BubbleDecomposition::nonsingle() const {
  return static_cast<std::size_t>(std::count_if(sets.begin(), sets.end(), [](const BubbleSet& s) {
    return s.kind != BubbleKind::single;
  }));
}

namespace {

const std::vector<std::size_t>& cached_spiral(int n) {
  thread_local std::map<int, std::vector<std::size_t>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, spiral_edge_order(n)).first;
  return it->second;
}

}  // namespace

BubbleDecomposition bubble_decomposition(const Configuration& config, std::size_t max_sets) {
  const BoxRegion& b = config.region();
  const int n = b.radius();
  BubbleDecomposition d;
  d.n = n;
  if (n < 1) return d;
  PivotalScanner scan(config);
  std::vector<std::uint8_t> absorbed(b.edge_count(), 0);
  for (std::size_t ei : cached_spiral(n)) {
    if (d.sets.size() >= max_sets) break;
    if (absorbed[ei]) continue;
    BubbleSet s;
    s.pivotal_edge = ei;
    const auto q = scan.classify(ei);
    s.pivotal = q.pivotal;
    if (q.pivotal) {
      const PivotalRecord r = scan.record(ei);
      s.cluster_size = r.cluster.size();
      if (r.contour_exists) {
        s.kind = r.edge_open ? BubbleKind::plus : BubbleKind::minus;
        s.touches_box_boundary = r.contour.uses_box_boundary;
        std::vector<std::uint8_t> mark(b.edge_count(), 0);
        for (std::size_t v : r.filled) {
          for (int dir = 0; dir < 4; ++dir) {
            std::size_t w, e;
            if (!step(b, v, dir, w, e) || mark[e]) continue;
            mark[e] = 1;
            if (absorbed[e]) s.bubble_condition = false;
            else s.edges.push_back(e);
          }
        }
        std::sort(s.edges.begin(), s.edges.end());
      } else {
        s.pivotal_without_contour = true;
      }
    }
    if (s.edges.empty()) s.edges.push_back(ei);
    for (std::size_t e : s.edges) absorbed[e] = 1;
    d.sets.push_back(std::move(s));
  }
  return d;
}

std::optional<std::pair<std::size_t, std::size_t>> disjoint_property_violation(
    const Configuration& config, const BubbleDecomposition& d) {
  const BoxRegion& b = config.region();
  std::vector<std::int64_t> owner(b.vertex_count(), -1);
  for (std::size_t i = 0; i < d.sets.size(); ++i) {
    const BubbleSet& s = d.sets[i];
    if (s.kind == BubbleKind::single) continue;
    std::vector<std::size_t> verts;
    for (std::size_t e : s.edges) {
      if (e == s.pivotal_edge || !config.is_open(e)) continue;
      const Edge ed = b.edge_at(e);
      verts.push_back(b.vertex_index(ed.lo));
      verts.push_back(b.vertex_index(ed.hi()));
    }
    for (std::size_t v : verts)
      if (owner[v] >= 0 && static_cast<std::size_t>(owner[v]) != i)
        return std::make_pair(static_cast<std::size_t>(owner[v]), i);
    for (std::size_t v : verts) owner[v] = static_cast<std::int64_t>(i);
  }
  return std::nullopt;
}

namespace {

// Crossing number of the ray from p towards +x; vertices sit at half-integers
// so the ray never touches one.
bool encloses(const DualCircuit& c, VertexCoord p) {
  bool inside = false;
  for (std::size_t i = 0; i < c.vertices.size(); ++i) {
    const DualVertex a = c.vertices[i];
    const DualVertex q = c.vertices[(i + 1) % c.vertices.size()];
    if (a.x != q.x) continue;
    const double x = a.x + 0.5;
    const double y0 = std::min(a.y, q.y) + 0.5, y1 = std::max(a.y, q.y) + 0.5;
    if (x > p.x && p.y > y0 && p.y < y1) inside = !inside;
  }
  return inside;
}

}  // namespace

std::optional<std::string> validate_pivotal_record(const Configuration& config, const PivotalRecord& r) {
  const BoxRegion& b = config.region();
  if (!r.contour_exists) return std::nullopt;
  const DualCircuit& c = r.contour;
  if (c.edges.empty() || c.edges.size() != c.vertices.size()) return "circuit edge/vertex count mismatch";
  if (!(c.edges.front() == dual_edge(r.edge))) return "circuit does not start at e*";
  std::vector<DualVertex> sorted = c.vertices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return "circuit is not simple";
  for (std::size_t i = 0; i < c.edges.size(); ++i) {
    const DualVertex a = c.vertices[i], q = c.vertices[(i + 1) % c.vertices.size()];
    const DualEdge& e = c.edges[i];
    if (!((e.lo == a && e.hi() == q) || (e.lo == q && e.hi() == a))) return "circuit edges do not chain";
  }
  if (signed_area2(c.vertices) <= 0) return "circuit is not counterclockwise";
  if (!encloses(c, r.v_prime)) return "v' is not inside the circuit";
  if (encloses(c, r.v_second)) return "v'' is inside the circuit";
  for (std::size_t v : r.cluster)
    if (!encloses(c, b.vertex_at(v))) return "cluster vertex outside the circuit";
  for (std::size_t i = 1; i < c.edges.size(); ++i) {
    const Edge pe = primal_edge(c.edges[i]);
    if (!b.contains(pe)) {
      if (!c.uses_box_boundary) return "circuit leaves the box without the flag";
      continue;
    }
    if (config.is_open(pe)) return "open primal edge on the circuit";
  }
  return std::nullopt;
}

namespace {

// History key: (kind, scan edge, edge states) for each set, in order.
void append_key(std::string& key, const Configuration& c, const BubbleSet& s) {
  key.push_back(static_cast<char>('0' + static_cast<int>(s.kind)));
  key += std::to_string(s.pivotal_edge);
  key.push_back(':');
  for (std::size_t e : s.edges) {
    key += std::to_string(e);
    key.push_back(c.is_open(e) ? '+' : '-');
  }
  key.push_back('|');
}

// what an atom of the filtration remembers about one set; states of its
// edges are pinned separately
bool same_history_entry(const BubbleSet& a, const BubbleSet& b) {
  return a.kind == b.kind && a.pivotal_edge == b.pivotal_edge && a.edges == b.edges;
}

struct AtomStat {
  double mass = 0.0;
  double sum_t = 0.0;
  std::size_t representative = 0;
  std::uint64_t revealed = 0;  // edge mask of the union
};

}  // namespace

MartingaleReport verify_martingale_identities(int n, double epsilon) {
  const ExactDistribution dist = exact_enumerate(n);
  const BoxRegion box(n);
  MartingaleReport rep;
  rep.n = n;
  rep.epsilon = epsilon;
  rep.configurations = dist.size();
  rep.p_conditioning = dist.p_conditioning;
  rep.mean_T = dist.moment_T(1);
  rep.variance_T = dist.variance_T();

  auto fail = [&](IdentityCheck& chk, std::int64_t witness) {
    chk.ok = false;
    if (rep.ok) {
      rep.ok = false;
      rep.first_failure = chk.name;
      rep.witness = witness;
    }
  };

  // normalization
  {
    IdentityCheck chk{"normalization", true, 0.0, 1e-12, ""};
    double sp = 0, sn = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      sp += dist.prob[i];
      sn += dist.nu[i];
    }
    chk.max_error = std::max(std::abs(sp - 1.0), std::abs(sn - 1.0));
    if (chk.max_error > chk.tolerance) fail(chk, -1);
    rep.checks.push_back(chk);
  }

  const std::size_t N = dist.size();
  std::vector<BubbleDecomposition> dec(N);
  std::vector<std::vector<std::string>> keys(N);
  std::vector<std::vector<std::uint64_t>> revealed(N);
  Configuration c(box);
  IdentityCheck uniq{"uniqueness", true, 0.0, 0.0, ""};
  for (std::size_t i = 0; i < N; ++i) {
    if (!dist.conditioned[i]) continue;
    ++rep.conditioned;
    if (!c.words().empty()) c.words()[0] = i;
    dec[i] = bubble_decomposition(c);
    // a function of the configuration that partitions the edges in scan order
    if (!(bubble_decomposition(c) == dec[i])) {
      uniq.detail = "decomposition not reproducible";
      fail(uniq, static_cast<std::int64_t>(i));
    }
    std::uint64_t seen = 0;
    std::string key;
    for (const BubbleSet& s : dec[i].sets) {
      for (std::size_t e : s.edges) {
        if (seen >> e & 1u) {
          uniq.detail = "edge in two sets";
          if (uniq.ok) fail(uniq, static_cast<std::int64_t>(i));
        }
        seen |= std::uint64_t{1} << e;
      }
      append_key(key, c, s);
      keys[i].push_back(key);
      revealed[i].push_back(seen);
    }
    if (seen != (std::uint64_t{1} << dist.edges) - 1 && dist.edges > 0) {
      uniq.detail = "sets do not cover the box";
      if (uniq.ok) fail(uniq, static_cast<std::int64_t>(i));
    }
    if (dec[i].nonsingle() > 0) ++rep.nonsingle_configurations;
    rep.max_sets = std::max(rep.max_sets, dec[i].sets.size());
  }
  rep.checks.push_back(uniq);

  const std::size_t K = rep.max_sets;
  auto key_at = [&](std::size_t i, std::size_t k) -> const std::string& {
    return keys[i][std::min(k, keys[i].size()) - 1];
  };

  // atoms of F_k and M_k = E(T | F_k)
  std::vector<std::unordered_map<std::string, AtomStat>> atoms(K + 1);
  for (std::size_t k = 1; k <= K; ++k) {
    for (std::size_t i = 0; i < N; ++i) {
      if (!dist.conditioned[i]) continue;
      auto& a = atoms[k][key_at(i, k)];
      if (a.mass == 0.0) {
        a.representative = i;
        a.revealed = revealed[i][std::min(k, revealed[i].size()) - 1];
      }
      a.mass += dist.nu[i];
      a.sum_t += dist.nu[i] * dist.T[i];
    }
    rep.atoms.push_back(atoms[k].size());
  }

  // nesting: every atom of F_{k+1} lies inside one atom of F_k
  {
    IdentityCheck chk{"filtration_nesting", true, 0.0, 0.0, ""};
    for (std::size_t k = 1; k < K && chk.ok; ++k) {
      std::unordered_map<std::string, std::string> parent;
      for (std::size_t i = 0; i < N && chk.ok; ++i) {
        if (!dist.conditioned[i]) continue;
        const auto [it, inserted] = parent.emplace(key_at(i, k + 1), key_at(i, k));
        if (!inserted && it->second != key_at(i, k)) {
          chk.detail = "k=" + std::to_string(k);
          fail(chk, static_cast<std::int64_t>(i));
        }
      }
    }
    rep.checks.push_back(chk);
  }

  // union-determined atoms that the history splits (reported only)
  for (std::size_t k = 1; k <= K; ++k) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::string> by_union;
    std::map<std::pair<std::uint64_t, std::uint64_t>, bool> split;
    for (std::size_t i = 0; i < N; ++i) {
      if (!dist.conditioned[i]) continue;
      const std::uint64_t u = revealed[i][std::min(k, revealed[i].size()) - 1];
      const std::pair<std::uint64_t, std::uint64_t> uk{u, i & u};
      const auto [it, inserted] = by_union.emplace(uk, key_at(i, k));
      if (!inserted && it->second != key_at(i, k)) split[uk] = true;
    }
    rep.nonadapted.push_back(split.size());
  }

  const double mu = rep.mean_T;
  std::vector<std::vector<double>> delta(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (!dist.conditioned[i]) continue;
    delta[i].resize(K);
    double prev = mu;
    for (std::size_t k = 1; k <= K; ++k) {
      const AtomStat& a = atoms[k].at(key_at(i, k));
      const double m = a.sum_t / a.mass;
      delta[i][k - 1] = m - prev;
      prev = m;
    }
  }

  {
    IdentityCheck tele{"telescoping", true, 0.0, 1e-9, ""};
    IdentityCheck term{"terminal_value", true, 0.0, 1e-9, ""};
    for (std::size_t i = 0; i < N; ++i) {
      if (!dist.conditioned[i]) continue;
      double s = 0;
      for (double dk : delta[i]) s += dk;
      const double err = std::abs(s - (dist.T[i] - mu));
      if (err > tele.max_error) tele.max_error = err;
      const AtomStat& a = atoms[K].at(key_at(i, K));
      term.max_error = std::max(term.max_error, std::abs(a.sum_t / a.mass - dist.T[i]));
      if (err > tele.tolerance && tele.ok) fail(tele, static_cast<std::int64_t>(i));
    }
    if (term.max_error > term.tolerance) fail(term, -1);
    rep.checks.push_back(tele);
    rep.checks.push_back(term);
  }

  {
    IdentityCheck centered{"centered_increments", true, 0.0, 1e-12, ""};
    IdentityCheck ortho{"orthogonality", true, 0.0, 1e-9, ""};
    IdentityCheck var{"variance_decomposition", true, 0.0, 1e-9, ""};
    rep.delta_sq.assign(K, 0.0);
    std::vector<double> mean_delta(K, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      if (!dist.conditioned[i]) continue;
      for (std::size_t k = 0; k < K; ++k) {
        mean_delta[k] += dist.nu[i] * delta[i][k];
        rep.delta_sq[k] += dist.nu[i] * delta[i][k] * delta[i][k];
      }
    }
    for (std::size_t k = 0; k < K; ++k) centered.max_error = std::max(centered.max_error, std::abs(mean_delta[k]));
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t k = j + 1; k < K; ++k) {
        double s = 0;
        for (std::size_t i = 0; i < N; ++i)
          if (dist.conditioned[i]) s += dist.nu[i] * delta[i][j] * delta[i][k];
        ortho.max_error = std::max(ortho.max_error, std::abs(s));
      }
    }
    rep.sum_delta_sq = std::accumulate(rep.delta_sq.begin(), rep.delta_sq.end(), 0.0);
    var.max_error = std::abs(rep.sum_delta_sq - rep.variance_T);
    if (centered.max_error > centered.tolerance) fail(centered, -1);
    if (ortho.max_error > ortho.tolerance) fail(ortho, -1);
    if (var.max_error > var.tolerance) fail(var, -1);
    rep.checks.push_back(centered);
    rep.checks.push_back(ortho);
    rep.checks.push_back(var);
  }

  // Conditional weights over the residual configurations of every realized
  // atom sum to one; the atom mass comes from the grouping above, the
  // residual sum from a separate enumeration.
  {
    IdentityCheck chk{"residual_normalization", true, 0.0, 1e-12, ""};
    for (std::size_t k = 1; k <= K; ++k) {
      for (const auto& [key, a] : atoms[k]) {
        if (keys[a.representative].size() < k) continue;  // padded, not a realized atom
        std::vector<std::size_t> residual;
        for (std::size_t e = 0; e < dist.edges; ++e)
          if (!(a.revealed >> e & 1u)) residual.push_back(e);
        Configuration base(box);
        if (!base.words().empty()) base.words()[0] = a.representative & a.revealed;
        double sum = 0.0;
        enumerate_subset(base, residual, 0.5, [&](const Configuration& cc, double) {
          const std::size_t idx = cc.words().empty() ? 0 : cc.words()[0];
          if (dist.conditioned[idx] && key_at(idx, k) == key && keys[idx].size() >= k)
            sum += dist.nu[idx] / a.mass;
        });
        const double err = std::abs(sum - 1.0);
        if (err > chk.max_error) chk.max_error = err;
        if (err > chk.tolerance && chk.ok) fail(chk, static_cast<std::int64_t>(a.representative));
      }
    }
    rep.checks.push_back(chk);
  }

  // H_eps(e) with e open and with e closed carry equal nu-mass. At p = 1/2
  // all configurations weigh the same, so equal counts make it exact.
  {
    IdentityCheck chk{"h_epsilon_symmetry", true, 0.0, 0.0, ""};
    std::vector<std::int64_t> open_count(dist.edges, 0), closed_count(dist.edges, 0);
    std::size_t total_hits = 0;
    for (std::size_t i = 0; i < N; ++i) {
      if (!dist.conditioned[i]) continue;
      if (!c.words().empty()) c.words()[0] = i;
      for (const auto& h : detect_H_epsilon(c, epsilon)) {
        ++total_hits;
        (h.edge_open ? open_count : closed_count)[h.edge_index]++;
      }
    }
    for (std::size_t e = 0; e < dist.edges; ++e) {
      const double diff = std::abs(static_cast<double>(open_count[e] - closed_count[e])) *
                          (dist.size() ? dist.prob[0] / dist.p_conditioning : 0.0);
      chk.max_error = std::max(chk.max_error, diff);
    }
    chk.detail = "hits=" + std::to_string(total_hits);
    if (chk.max_error > 0.0) fail(chk, -1);
    rep.checks.push_back(chk);
  }
  return rep;
}

DeltaSquareEstimate estimate_delta_square_sum(int n, std::uint64_t outer, std::uint64_t inner,
                                              std::uint64_t direct_replicas, std::uint64_t seed,
                                              const RunOptions& opts) {
  if (n < 1) throw Error(ErrorCode::usage, "delta-square estimate needs n >= 1");
  if (outer < 2 || inner < 1 || direct_replicas < 3)
    throw Error(ErrorCode::usage, "delta-square estimate needs outer >= 2, inner >= 1, direct >= 3");
  const std::uint64_t s_outer = derive_seed(seed, {1});
  const std::uint64_t s_half[2] = {derive_seed(seed, {2}), derive_seed(seed, {3})};
  const std::uint64_t s_mu[2] = {derive_seed(seed, {4}), derive_seed(seed, {5})};
  const std::uint64_t s_direct = derive_seed(seed, {6});

  DeltaSquareEstimate out;
  out.outer = outer;
  double mu[2];
  for (int h = 0; h < 2; ++h) {
    const SampleSet s = collect_T(n, n, direct_replicas, s_mu[h], opts);
    mu[h] = static_cast<double>(accumulate(s).mean());
  }
  {
    const SampleSet s = collect_T(n, n, direct_replicas, s_direct, opts);
    const MomentAccumulator acc = accumulate(s);
    out.direct = acc;
    out.direct_variance = {static_cast<double>(acc.variance()), static_cast<double>(acc.variance_jackknife_se())};
    out.mean_T = {static_cast<double>(acc.mean()), static_cast<double>(acc.mean_se())};
  }

  const BoxRegion box(n);
  // some atoms are thin (a far edge decides whether an early bubble stays
  // pivotal), so the ceiling is the rejection budget rather than a multiple of inner
  const std::uint64_t max_draws = std::max<std::uint64_t>(opts.max_attempts, inner);
  ConditionedSampler sampler(n, s_outer, opts.p, opts.max_attempts);
  ClusterExplorer ex;
  RealAccumulator acc;
  Configuration draw(box);
  for (std::uint64_t i = 0; i < outer; ++i) {
    sampler.sample(opts.replica_offset + i, n);
    const Configuration c = sampler.configuration();
    const double t = static_cast<double>(ex.explore_origin(c, n).inner_count);
    const BubbleDecomposition d = bubble_decomposition(c);
    const std::size_t K = d.sets.size();
    std::vector<std::uint8_t> revealed(box.edge_count(), 0);
    double prev[2] = {mu[0], mu[1]};
    double total = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
      for (std::size_t e : d.sets[k - 1].edges) revealed[e] = 1;
      double m[2] = {t, t};
      if (k < K) {
        for (int h = 0; h < 2; ++h) {
          double sum = 0;
          std::uint64_t got = 0, j = 0;
          for (; j < max_draws && got < inner; ++j) {
            // attempt j of the same stream for every k: common random numbers
            resample(draw, opts.p, s_half[h], opts.replica_offset + i, j);
            for (std::size_t e = 0; e < box.edge_count(); ++e)
              if (revealed[e]) draw.set_open(e, c.is_open(e));
            const OriginCluster oc = ex.explore_origin(draw, n);
            if (oc.reach < n) continue;
            const BubbleDecomposition dd = bubble_decomposition(draw, k);
            if (dd.sets.size() < k ||
                !std::equal(dd.sets.begin(), dd.sets.begin() + k, d.sets.begin(), same_history_entry))
              continue;
            sum += static_cast<double>(oc.inner_count);
            ++got;
          }
          out.inner_draws += j;
          out.inner_accepts += got;
          if (got == 0)
            throw Error(ErrorCode::budget_exceeded,
                        "conditional resampling found no configuration in the atom (outer " +
                            std::to_string(opts.replica_offset + i) + ", k " + std::to_string(k) + " of " +
                            std::to_string(K) + ", " + std::to_string(j) + " draws)");
          m[h] = sum / static_cast<double>(got);
        }
      }
      total += (m[0] - prev[0]) * (m[1] - prev[1]);
      prev[0] = m[0];
      prev[1] = m[1];
    }
    acc.add(total);
  }
  out.per_outer = acc;
  out.sum_delta_sq = {acc.mean(), acc.mean_se()};
  const double se = std::hypot(out.sum_delta_sq.se, out.direct_variance.se);
  out.z = se > 0 ? (out.sum_delta_sq.value - out.direct_variance.value) / se : 0.0;
  return out;
}

}  // namespace perc
