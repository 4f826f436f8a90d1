#include "perclab/maxflow.hpp"

#include <algorithm>

namespace perc {

namespace {
constexpr std::int32_t kNone = -1;
constexpr std::int32_t kSourceMark = -2;
constexpr std::int32_t kSinkMark = -3;
constexpr std::int32_t kSuper = -2;  // parent of a first state
}  // namespace

int VertexDisjointFlow::solve(const GridGraph& g, int limit) {
  const std::size_t V = g.size();
  prev_.assign(V, kNone);
  next_.assign(V, kNone);
  if (parent_.size() != 2 * V) {
    parent_.assign(2 * V, 0);
    seen_.assign(2 * V, 0);
    epoch_ = 0;
  }
  int flow = 0;
  while (flow < limit && augment(g)) ++flow;
  return flow;
}

// States are 2v (v entered, "in") and 2v+1 (v left, "out").
bool VertexDisjointFlow::augment(const GridGraph& g) {
  if (++epoch_ == 0) {
    std::fill(seen_.begin(), seen_.end(), 0);
    epoch_ = 1;
  }
  queue_.clear();
  auto visit = [&](std::int32_t state, std::int32_t from) {
    if (seen_[state] == epoch_) return;
    seen_[state] = epoch_;
    parent_[state] = from;
    queue_.push_back(state);
  };
  const std::size_t V = g.size();
  for (std::size_t v = 0; v < V; ++v)
    if ((g.role[v] & (GridGraph::kActive | GridGraph::kSource)) ==
            (GridGraph::kActive | GridGraph::kSource) &&
        prev_[v] != kSourceMark)
      visit(static_cast<std::int32_t>(2 * v), kSuper);

  std::int32_t found = -1;
  for (std::size_t head = 0; head < queue_.size() && found < 0; ++head) {
    const std::int32_t s = queue_[head];
    const std::int32_t v = s >> 1;
    if ((s & 1) == 0) {
      if (prev_[v] == kNone) visit(s | 1, s);
      else if (prev_[v] >= 0) visit(2 * prev_[v] + 1, s);
      continue;
    }
    if ((g.role[v] & GridGraph::kSink) && next_[v] != kSinkMark) {
      found = s;
      break;
    }
    if (prev_[v] != kNone) visit(2 * v, s);
    const std::uint8_t mask = g.links[v];
    for (int d = 0; d < 4; ++d) {
      if (!(mask & (1u << d))) continue;
      const std::int32_t w = static_cast<std::int32_t>(g.neighbor(static_cast<std::size_t>(v), d));
      if (next_[v] != w) visit(2 * w, s);
    }
  }
  if (found < 0) return false;

  struct Link { std::int32_t from, to; };
  std::vector<Link> removals, additions;
  additions.push_back({found >> 1, kSinkMark});
  for (std::int32_t s = found; s != kSuper;) {
    const std::int32_t p = parent_[s];
    if (p == kSuper) {
      additions.push_back({kSourceMark, s >> 1});
      break;
    }
    const std::int32_t u = p >> 1, w = s >> 1;
    if (u != w) {
      if ((p & 1) == 0) removals.push_back({w, u});      // in(u) -> out(w) cancels w -> u
      else additions.push_back({u, w});                   // out(u) -> in(w)
    }
    s = p;
  }
  for (const Link& r : removals) {
    next_[r.from] = kNone;
    prev_[r.to] = kNone;
  }
  for (const Link& a : additions) {
    if (a.from == kSourceMark) prev_[a.to] = kSourceMark;
    else if (a.to == kSinkMark) next_[a.from] = kSinkMark;
    else {
      next_[a.from] = a.to;
      prev_[a.to] = a.from;
    }
  }
  return true;
}

std::vector<std::vector<std::size_t>> VertexDisjointFlow::paths(const GridGraph& g) const {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (prev_[v] != kSourceMark) continue;
    std::vector<std::size_t> path{v};
    std::int32_t cur = static_cast<std::int32_t>(v);
    while (next_[cur] >= 0 && path.size() <= g.size()) {
      cur = next_[cur];
      path.push_back(static_cast<std::size_t>(cur));
    }
    out.push_back(std::move(path));
  }
  return out;
}

}  // namespace perc
