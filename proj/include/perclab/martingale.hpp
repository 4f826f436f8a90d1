#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perclab/clusters.hpp"
#include "perclab/incipient.hpp"
#include "perclab/lattice.hpp"
#include "perclab/statistics.hpp"

namespace perc {

// Simple closed dual curve: vertices[i] -> vertices[i+1] is edges[i]
// (cyclically), oriented counterclockwise.
struct DualCircuit {
  std::vector<DualVertex> vertices;
  std::vector<DualEdge> edges;
  bool uses_box_boundary = false;  // crosses an edge that leaves the box
};

struct PivotalRecord {
  Edge edge;
  std::size_t edge_index = 0;
  bool edge_open = false;
  VertexCoord v_prime;   // endpoint whose connection to the origin depends on the edge
  VertexCoord v_second;  // origin-side endpoint
  // open cluster of v' with the edge closed, as sorted vertex indices
  std::vector<std::size_t> cluster;
  int cluster_reach = 0;
  // cluster plus the holes it encloses; empty when v'' is enclosed by the cluster
  std::vector<std::size_t> filled;
  bool contour_exists = false;
  // D*(v') together with e*, starting at e*
  DualCircuit contour;
};

// Pivotal for the connection of one endpoint to the origin inside the
// configuration's box: with the edge closed exactly one endpoint is joined to
// the origin.
std::optional<PivotalRecord> is_pivotal(const Configuration& config, const Edge& e);
// Same on B(n), n <= box radius.
std::optional<PivotalRecord> is_pivotal(const Configuration& config, const Edge& e, int n);

// Outer boundary of the region `inside` (vertex indices of box). Throws
// invariant unless it is a single simple circuit.
DualCircuit boundary_circuit(const BoxRegion& box, const std::vector<std::uint8_t>& inside,
                             std::optional<DualEdge> start = std::nullopt);

// Smallest dual circuit around an open cluster that stays inside B(n).
DualCircuit exterior_boundary(const ClusterLabeling& labeling, std::uint32_t cluster_id, int n);

// Precomputed origin cluster and its bridges; answers pivotality in O(1).
class PivotalScanner {
 public:
  explicit PivotalScanner(const Configuration& config);

  struct Quick {
    bool pivotal = false;
    std::size_t v_prime = 0;
    std::size_t v_second = 0;
    std::uint64_t cluster_size = 0;
    int cluster_reach = 0;
  };
  Quick classify(std::size_t edge_index) const;
  PivotalRecord record(std::size_t edge_index) const;  // edge must be pivotal

  const Configuration& config() const { return config_; }
  bool in_origin_cluster(std::size_t v) const { return label_.label_at(v) == origin_label_; }
  int origin_reach() const { return label_.reach(origin_label_); }

 private:
  const Configuration& config_;
  ClusterLabeling label_;
  std::uint32_t origin_label_;
  // for open edges inside the origin cluster that are bridges: the child
  // endpoint in the DFS tree and the child's subtree size and reach
  std::vector<std::int32_t> bridge_child_;
  std::vector<std::uint32_t> subtree_size_;
  std::vector<int> subtree_reach_;
};

struct HEpsilonHit {
  std::size_t edge_index = 0;
  bool edge_open = false;
  std::uint64_t cluster_size = 0;
};

// Edges e of B(n) (n = box radius) with H_eps(e): pivotal, the contour of
// v' stays inside B(n), and the cluster of v' has >= n^(2-5/48-eps) vertices.
std::vector<HEpsilonHit> detect_H_epsilon(const Configuration& config, double epsilon);
// Reference implementation through is_pivotal on every edge.
std::vector<HEpsilonHit> detect_H_epsilon_naive(const Configuration& config, double epsilon);
double h_epsilon_threshold(int n, double epsilon);

// Flipping a hit edge keeps the hit and the conditioning (0 -> boundary);
// returns the first edge for which that fails.
std::optional<std::size_t> h_epsilon_involution_failure(const Configuration& config, double epsilon);

// Shells s = 1..n; each shell walks the boundary of B(s) counterclockwise
// from (s, 0) and emits the edges whose larger endpoint norm is s.
std::vector<std::size_t> spiral_edge_order(int n);

enum class BubbleKind { single, plus, minus };

struct BubbleSet {
  BubbleKind kind = BubbleKind::single;
  std::size_t pivotal_edge = 0;    // scan edge; the pivotal edge of a bubble
  std::vector<std::size_t> edges;  // sorted edge indices
  bool pivotal = false;
  bool pivotal_without_contour = false;
  bool bubble_condition = true;    // nothing enclosed was absorbed earlier
  bool touches_box_boundary = false;
  std::uint64_t cluster_size = 0;
  bool operator==(const BubbleSet&) const = default;
};

struct BubbleDecomposition {
  int n = 0;
  std::vector<BubbleSet> sets;
  std::size_t nonsingle() const;
  bool operator==(const BubbleDecomposition&) const = default;
};

BubbleDecomposition bubble_decomposition(const Configuration& config,
                                         std::size_t max_sets = SIZE_MAX);

// Vertices of open edges of a non-single set, other than its pivotal edge,
// never appear in another non-single set. Returns the offending pair.
std::optional<std::pair<std::size_t, std::size_t>> disjoint_property_violation(
    const Configuration& config, const BubbleDecomposition& d);

// Geometric checks on a pivotal record: simple circuit through e*, v' inside,
// v'' outside, closed primal edges along the circuit except e* and edges
// leaving the box. Returns a description of the first failure.
std::optional<std::string> validate_pivotal_record(const Configuration& config, const PivotalRecord& r);

struct IdentityCheck {
  std::string name;
  bool ok = true;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct MartingaleReport {
  int n = 0;
  double epsilon = 0.2;
  std::size_t configurations = 0;
  std::size_t conditioned = 0;
  double p_conditioning = 0.0;
  double mean_T = 0.0;
  double variance_T = 0.0;
  double sum_delta_sq = 0.0;
  std::size_t max_sets = 0;
  std::vector<double> delta_sq;          // E Delta_k^2, k = 1..max_sets
  std::vector<std::size_t> atoms;        // atoms of F_k
  std::vector<std::size_t> nonadapted;   // union-determined atoms split by history
  std::size_t nonsingle_configurations = 0;
  std::vector<IdentityCheck> checks;
  bool ok = true;
  std::string first_failure;
  std::int64_t witness = -1;  // configuration index (bit i = edge i)
};

MartingaleReport verify_martingale_identities(int n = 1, double epsilon = 0.2);

struct DeltaSquareEstimate {
  Estimate sum_delta_sq;
  Estimate direct_variance;
  Estimate mean_T;
  std::uint64_t outer = 0;
  std::uint64_t inner_draws = 0;
  std::uint64_t inner_accepts = 0;
  double z = 0.0;  // (sum - direct) / combined SE
  RealAccumulator per_outer;     // per outer sample sum over k of the half products
  MomentAccumulator direct;      // T values behind the direct variance
};

// Monte Carlo sum over k of E Delta_k^2 under nu_n by conditional resampling
// of the unrevealed edges (common random numbers across k, two independent
// halves per k), next to a direct variance estimate.
DeltaSquareEstimate estimate_delta_square_sum(int n, std::uint64_t outer, std::uint64_t inner,
                                              std::uint64_t direct_replicas, std::uint64_t seed,
                                              const RunOptions& opts = {});

}  // namespace perc
