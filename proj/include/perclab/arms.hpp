#pragma once

#include "perclab/lattice.hpp"
#include "perclab/maxflow.hpp"

namespace perc {

struct ArmQuery {
  int inner = 1;
  int outer = 2;
  int open_arms = 1;
  int closed_arms = 0;
  VertexCoord base{0, 0};
};

struct ArmResult {
  int max_open_disjoint = 0;
  int max_closed_disjoint = 0;
  bool event_holds = false;
};

// Open subgraph of A(m,n) around `base`; sources on the inner boundary, sinks
// on the outer one.
void build_open_annulus(const Configuration& config, int m, int n, VertexCoord base, GridGraph& g);
// Closed dual edges whose primal edge lies in A(m,n). Sources are the dual
// vertices at norm m - 1/2 (1/2 when m = 0), sinks those at norm n + 1/2.
void build_closed_annulus(const Configuration& config, int m, int n, VertexCoord base, GridGraph& g);

bool one_arm(const Configuration& config, int m, int n);
int count_disjoint_open_crossings(const Configuration& config, int m, int n);
int count_disjoint_closed_crossings(const Configuration& config, int m, int n);
ArmResult arm_event(const Configuration& config, const ArmQuery& q);

// Reusable scratch for Monte Carlo. Counts are capped at the query's
// requirement, and closed arms are only counted when the open part holds.
class ArmDetector {
 public:
  ArmResult detect(const Configuration& config, const ArmQuery& q, bool exact = false);
  // Open count capped at open_cap; the closed count (capped at closed_cap) is
  // only computed when there is at least one open arm, otherwise it is 0.
  ArmResult capped_counts(const Configuration& config, int m, int n, int open_cap, int closed_cap);

 private:
  GridGraph graph_;
  VertexDisjointFlow flow_;
};

// The (n+1) x n rectangle [0, n+1] x [0, n] without its two vertical sides.
// Open crossing: left column to right column. Closed crossing: dual path from
// the row below the rectangle to the row above it.
struct CrossingResult {
  bool open_crossing = false;
  bool closed_crossing = false;
};
CrossingResult rectangle_crossings(const Configuration& config, int n);

}  // namespace perc
