#include "perclab/arms.hpp"

#include "perclab/error.hpp"

namespace perc {

namespace {

void check_annulus(const Configuration& config, int m, int n, VertexCoord base) {
  Annulus a(m, n);  // validates m < n
  (void)a;
  const int R = config.region().radius();
  if (std::abs(base.x) + n > R || std::abs(base.y) + n > R)
    throw Error(ErrorCode::usage, "annulus does not fit in the configuration box");
}

}  // namespace

void build_open_annulus(const Configuration& config, int m, int n, VertexCoord base, GridGraph& g) {
  check_annulus(config, m, n, base);
  const BoxRegion& box = config.region();
  const int L = 2 * n + 1;
  g.reset(L, L);
  for (int j = 0; j < L; ++j) {
    for (int i = 0; i < L; ++i) {
      const int r = std::max(std::abs(i - n), std::abs(j - n));
      if (r < m) continue;
      std::uint8_t role = GridGraph::kActive;
      if (r == m) role |= GridGraph::kSource;
      if (r == n) role |= GridGraph::kSink;
      g.role[static_cast<std::size_t>(j) * L + i] = role;
    }
  }
  for (int j = 0; j < L; ++j) {
    for (int i = 0; i < L; ++i) {
      const std::size_t v = static_cast<std::size_t>(j) * L + i;
      if (!g.role[v]) continue;
      const VertexCoord p{base.x + i - n, base.y + j - n};
      if (i + 1 < L && g.role[v + 1] &&
          config.is_open(box.horizontal_edge(p.x + box.radius(), p.y + box.radius())))
        g.link(v, 0);
      if (j + 1 < L && g.role[v + L] &&
          config.is_open(box.vertical_edge(p.x + box.radius(), p.y + box.radius())))
        g.link(v, 2);
    }
  }
}

void build_closed_annulus(const Configuration& config, int m, int n, VertexCoord base, GridGraph& g) {
  check_annulus(config, m, n, base);
  const BoxRegion& box = config.region();
  const int R = box.radius();
  // dual vertex (x, y), x, y in [-n-1, n], stands for (x + 1/2, y + 1/2)
  const int L = 2 * n + 2;
  const int lo2 = m == 0 ? 1 : 2 * m - 1;
  const int hi2 = 2 * n + 1;
  g.reset(L, L);
  for (int j = 0; j < L; ++j) {
    for (int i = 0; i < L; ++i) {
      const int r2 = dual_norm2({i - n - 1, j - n - 1});
      if (r2 < lo2 || r2 > hi2) continue;
      std::uint8_t role = GridGraph::kActive;
      if (r2 == lo2) role |= GridGraph::kSource;
      if (r2 == hi2) role |= GridGraph::kSink;
      g.role[static_cast<std::size_t>(j) * L + i] = role;
    }
  }
  auto in_annulus = [&](VertexCoord rel) {
    const int r = max_norm(rel);
    return r >= m && r <= n;
  };
  for (int j = 0; j < L; ++j) {
    for (int i = 0; i < L; ++i) {
      const std::size_t v = static_cast<std::size_t>(j) * L + i;
      if (!g.role[v]) continue;
      const DualVertex d{i - n - 1, j - n - 1};
      if (i + 1 < L && g.role[v + 1]) {
        const Edge pe = primal_edge(DualEdge{d, Orientation::horizontal});
        if (in_annulus(pe.lo) && in_annulus(pe.hi()) &&
            !config.is_open(box.vertical_edge(pe.lo.x + base.x + R, pe.lo.y + base.y + R)))
          g.link(v, 0);
      }
      if (j + 1 < L && g.role[v + L]) {
        const Edge pe = primal_edge(DualEdge{d, Orientation::vertical});
        if (in_annulus(pe.lo) && in_annulus(pe.hi()) &&
            !config.is_open(box.horizontal_edge(pe.lo.x + base.x + R, pe.lo.y + base.y + R)))
          g.link(v, 2);
      }
    }
  }
}

ArmResult ArmDetector::detect(const Configuration& config, const ArmQuery& q, bool exact) {
  if (q.open_arms < 0 || q.closed_arms < 0)
    throw Error(ErrorCode::usage, "arm counts must be nonnegative");
  ArmResult r;
  build_open_annulus(config, q.inner, q.outer, q.base, graph_);
  r.max_open_disjoint = flow_.solve(graph_, exact ? INT_MAX : q.open_arms);
  if (exact || r.max_open_disjoint >= q.open_arms) {
    build_closed_annulus(config, q.inner, q.outer, q.base, graph_);
    r.max_closed_disjoint = flow_.solve(graph_, exact ? INT_MAX : q.closed_arms);
  }
  r.event_holds = r.max_open_disjoint >= q.open_arms && r.max_closed_disjoint >= q.closed_arms;
  return r;
}

ArmResult ArmDetector::capped_counts(const Configuration& config, int m, int n, int open_cap,
                                     int closed_cap) {
  ArmResult r;
  build_open_annulus(config, m, n, {0, 0}, graph_);
  r.max_open_disjoint = flow_.solve(graph_, open_cap);
  if (r.max_open_disjoint >= 1) {
    build_closed_annulus(config, m, n, {0, 0}, graph_);
    r.max_closed_disjoint = flow_.solve(graph_, closed_cap);
  }
  r.event_holds = r.max_open_disjoint >= open_cap && r.max_closed_disjoint >= closed_cap;
  return r;
}

ArmResult arm_event(const Configuration& config, const ArmQuery& q) {
  ArmDetector d;
  return d.detect(config, q, true);
}

bool one_arm(const Configuration& config, int m, int n) {
  ArmDetector d;
  return d.detect(config, ArmQuery{m, n, 1, 0, {0, 0}}).event_holds;
}

int count_disjoint_open_crossings(const Configuration& config, int m, int n) {
  GridGraph g;
  build_open_annulus(config, m, n, {0, 0}, g);
  VertexDisjointFlow f;
  return f.solve(g);
}

int count_disjoint_closed_crossings(const Configuration& config, int m, int n) {
  GridGraph g;
  build_closed_annulus(config, m, n, {0, 0}, g);
  VertexDisjointFlow f;
  return f.solve(g);
}

namespace {

// Plain reachability on a grid graph.
bool grid_connects(const GridGraph& g) {
  std::vector<std::uint8_t> seen(g.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t v = 0; v < g.size(); ++v)
    if (g.role[v] & GridGraph::kSource) {
      seen[v] = 1;
      stack.push_back(v);
    }
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (g.role[v] & GridGraph::kSink) return true;
    for (int d = 0; d < 4; ++d) {
      if (!(g.links[v] & (1u << d))) continue;
      const std::size_t w = g.neighbor(v, d);
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return false;
}

}  // namespace

CrossingResult rectangle_crossings(const Configuration& config, int n) {
  if (n < 1) throw Error(ErrorCode::usage, "rectangle crossing needs n >= 1");
  const BoxRegion& box = config.region();
  const int R = box.radius();
  if (R < n + 1) throw Error(ErrorCode::usage, "rectangle does not fit in the configuration box");
  CrossingResult out;
  GridGraph g;
  // primal vertices (x, y), x in [0, n+1], y in [0, n]
  g.reset(n + 2, n + 1);
  for (int y = 0; y <= n; ++y) {
    for (int x = 0; x <= n + 1; ++x) {
      std::uint8_t role = GridGraph::kActive;
      if (x == 0) role |= GridGraph::kSource;
      if (x == n + 1) role |= GridGraph::kSink;
      g.role[static_cast<std::size_t>(y) * (n + 2) + x] = role;
    }
  }
  for (int y = 0; y <= n; ++y) {
    for (int x = 0; x <= n + 1; ++x) {
      const std::size_t v = static_cast<std::size_t>(y) * (n + 2) + x;
      if (x <= n && config.is_open(box.horizontal_edge(x + R, y + R))) g.link(v, 0);
      if (x >= 1 && x <= n && y < n && config.is_open(box.vertical_edge(x + R, y + R))) g.link(v, 2);
    }
  }
  out.open_crossing = grid_connects(g);
  // dual vertices (x, y), x in [0, n], y in [-1, n]
  g.reset(n + 1, n + 2);
  for (int j = 0; j < n + 2; ++j) {
    for (int x = 0; x <= n; ++x) {
      std::uint8_t role = GridGraph::kActive;
      if (j == 0) role |= GridGraph::kSource;
      if (j == n + 1) role |= GridGraph::kSink;
      g.role[static_cast<std::size_t>(j) * (n + 1) + x] = role;
    }
  }
  for (int j = 0; j < n + 2; ++j) {
    const int y = j - 1;
    for (int x = 0; x <= n; ++x) {
      const std::size_t v = static_cast<std::size_t>(j) * (n + 1) + x;
      // vertical dual edge crosses the horizontal edge (x, y+1)-(x+1, y+1)
      if (j + 1 < n + 2 && !config.is_open(box.horizontal_edge(x + R, y + 1 + R))) g.link(v, 2);
      // horizontal dual edge crosses the vertical edge (x+1, y)-(x+1, y+1)
      if (x < n && y >= 0 && y < n && !config.is_open(box.vertical_edge(x + 1 + R, y + R)))
        g.link(v, 0);
    }
  }
  out.closed_crossing = grid_connects(g);
  return out;
}

}  // namespace perc
