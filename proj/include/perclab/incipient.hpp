#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "perclab/clusters.hpp"
#include "perclab/lattice.hpp"
#include "perclab/statistics.hpp"

namespace perc {

inline constexpr std::uint64_t kDefaultMaxAttempts = 1000000;

// Exact rejection sampler for P_p( . | 0 -> boundary of B(m)). Replica r uses
// attempts a = 0, 1, ... of the stream (seed, r, a) until one is accepted.
class ConditionedSampler {
 public:
  ConditionedSampler(int m, std::uint64_t seed, double p = 0.5,
                     std::uint64_t max_attempts = kDefaultMaxAttempts);

  // Draws the accepted configuration for `replica`; the origin cluster
  // summary counts vertices within B(n).
  const OriginCluster& sample(std::uint64_t replica, int n);
  const Configuration& configuration() const { return config_; }
  std::uint64_t last_attempts() const { return last_attempts_; }
  std::uint64_t attempts() const { return attempts_; }
  std::uint64_t accepts() const { return accepts_; }
  int scale() const { return m_; }

 private:
  int m_;
  std::uint64_t seed_;
  double p_;
  std::uint64_t max_attempts_;
  Configuration config_;
  ClusterExplorer explorer_;
  OriginCluster last_;
  std::uint64_t last_attempts_ = 0;
  std::uint64_t attempts_ = 0;
  std::uint64_t accepts_ = 0;
};

Configuration sample_incipient(int m, int n, std::uint64_t seed, std::uint64_t replica,
                               double p = 0.5, std::uint64_t max_attempts = kDefaultMaxAttempts);

struct RunOptions {
  double p = 0.5;
  unsigned workers = 1;
  std::uint64_t max_attempts = kDefaultMaxAttempts;
  std::uint64_t replica_offset = 0;
};

// Per-replica observable values, in replica order.
struct SampleSet {
  std::vector<std::int64_t> values;
  std::uint64_t attempts = 0;
};

SampleSet collect_T(int n, int m, std::uint64_t replicas, std::uint64_t seed, const RunOptions& opts = {});
SampleSet collect_S(int n, std::uint64_t replicas, std::uint64_t seed, const RunOptions& opts = {});

MomentAccumulator accumulate(const SampleSet& s);

struct MomentEstimate {
  ObservableKind kind = ObservableKind::T;
  int order = 1;
  double estimate = 0.0;
  double se = 0.0;
  std::uint64_t samples = 0;
  int n = 0;
  int m = 0;
  std::uint64_t attempts = 0;
};

// Mean of value^order with the standard error of that mean.
MomentEstimate moment_from_samples(const SampleSet& s, ObservableKind kind, int order, int n, int m);
MomentEstimate variance_from_samples(const SampleSet& s, ObservableKind kind, int n, int m);

// T is sampled under the conditioned measure on B(m), S unconditioned on B(2n)
// (m is ignored for S).
MomentEstimate estimate_moment(ObservableKind kind, int order, int n, int m, std::uint64_t replicas,
                               std::uint64_t seed, const RunOptions& opts = {});
MomentEstimate estimate_variance(ObservableKind kind, int n, int m, std::uint64_t replicas,
                                 std::uint64_t seed, const RunOptions& opts = {});

// Frequency of {S_n >= threshold}.
Estimate tail_probability_S(int n, double threshold, std::uint64_t replicas, std::uint64_t seed,
                            const RunOptions& opts = {});
double tail_threshold(int n, double epsilon);  // n^(2 - 5/48 - epsilon)

inline constexpr std::size_t kMaxEnumerationEdges = 26;

// Every configuration of B(n) (bit i of the index = state of edge i) with
// its P_p weight, its weight under nu_n = P_p( . | 0 -> boundary of B(n)),
// and T_n.
struct ExactDistribution {
  int n = 0;
  double p = 0.5;
  std::size_t edges = 0;
  std::vector<double> prob;
  std::vector<double> nu;
  std::vector<std::uint32_t> T;
  std::vector<std::uint8_t> conditioned;
  double p_conditioning = 0.0;

  std::size_t size() const { return prob.size(); }
  double moment_T(int order) const;
  double variance_T() const;
  std::map<std::uint32_t, double> distribution_T() const;
};

ExactDistribution exact_enumerate(int n, double p = 0.5);

// Calls fn(config, weight) for every assignment of the listed edges, other
// edges fixed as in base; weight is the P_p probability of the assignment.
template <class F>
void enumerate_subset(const Configuration& base, const std::vector<std::size_t>& edges, double p, F&& fn);

}  // namespace perc

#include "perclab/error.hpp"

namespace perc {

template <class F>
void enumerate_subset(const Configuration& base, const std::vector<std::size_t>& edges, double p, F&& fn) {
  if (edges.size() > kMaxEnumerationEdges)
    throw Error(ErrorCode::region_too_large, "enumeration limited to 26 edges");
  Configuration c = base;
  const std::uint64_t total = std::uint64_t{1} << edges.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double w = 1.0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const bool open = (mask >> i) & 1u;
      c.set_open(edges[i], open);
      w *= open ? p : 1.0 - p;
    }
    fn(static_cast<const Configuration&>(c), w);
  }
}

}  // namespace perc
