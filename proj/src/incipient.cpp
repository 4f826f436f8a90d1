#include "perclab/incipient.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "perclab/parallel.hpp"

namespace perc {

ConditionedSampler::ConditionedSampler(int m, std::uint64_t seed, double p, std::uint64_t max_attempts)
    : m_(m), seed_(seed), p_(p), max_attempts_(max_attempts), config_(BoxRegion(m)) {
  if (m < 0) throw Error(ErrorCode::usage, "conditioning scale must be nonnegative");
  if (max_attempts == 0) throw Error(ErrorCode::usage, "max_attempts must be positive");
}

const OriginCluster& ConditionedSampler::sample(std::uint64_t replica, int n) {
  if (n < 0 || n > m_) throw Error(ErrorCode::usage, "incipient sampling needs 0 <= n <= m");
  for (std::uint64_t a = 0; a < max_attempts_; ++a) {
    resample(config_, p_, seed_, replica, a);
    ++attempts_;
    last_ = explorer_.explore_origin(config_, n);
    if (last_.reach >= m_) {
      ++accepts_;
      last_attempts_ = a + 1;
      return last_;
    }
  }
  throw Error(ErrorCode::budget_exceeded,
              "no configuration with 0 -> boundary of B(" + std::to_string(m_) + ") within " +
                  std::to_string(max_attempts_) + " attempts (replica " + std::to_string(replica) + ")");
}

Configuration sample_incipient(int m, int n, std::uint64_t seed, std::uint64_t replica, double p,
                               std::uint64_t max_attempts) {
  ConditionedSampler s(m, seed, p, max_attempts);
  s.sample(replica, n);
  return s.configuration();
}

SampleSet collect_T(int n, int m, std::uint64_t replicas, std::uint64_t seed, const RunOptions& opts) {
  if (n < 0 || n > m) throw Error(ErrorCode::usage, "T_n needs 0 <= n <= m");
  SampleSet out;
  out.values.assign(replicas, 0);
  std::vector<std::uint64_t> attempts(replicas, 0);
  const unsigned workers = std::max(1u, opts.workers);
  std::vector<std::unique_ptr<ConditionedSampler>> samplers(workers);
  parallel_for(replicas, workers, [&](std::uint64_t i, unsigned w) {
    if (!samplers[w]) samplers[w] = std::make_unique<ConditionedSampler>(m, seed, opts.p, opts.max_attempts);
    const OriginCluster& oc = samplers[w]->sample(opts.replica_offset + i, n);
    out.values[i] = static_cast<std::int64_t>(oc.inner_count);
    attempts[i] = samplers[w]->last_attempts();
  });
  for (auto a : attempts) out.attempts += a;
  return out;
}

SampleSet collect_S(int n, std::uint64_t replicas, std::uint64_t seed, const RunOptions& opts) {
  if (n < 0) throw Error(ErrorCode::usage, "S_n needs n >= 0");
  SampleSet out;
  out.values.assign(replicas, 0);
  out.attempts = replicas;
  const unsigned workers = std::max(1u, opts.workers);
  struct Scratch {
    Configuration config;
    ClusterExplorer explorer;
  };
  std::vector<std::unique_ptr<Scratch>> scratch(workers);
  const BoxRegion box(2 * n);
  parallel_for(replicas, workers, [&](std::uint64_t i, unsigned w) {
    if (!scratch[w]) scratch[w] = std::make_unique<Scratch>(Scratch{Configuration(box), {}});
    resample(scratch[w]->config, opts.p, seed, opts.replica_offset + i, 0);
    out.values[i] = static_cast<std::int64_t>(observable_S(scratch[w]->explorer, scratch[w]->config, n).value);
  });
  return out;
}

MomentAccumulator accumulate(const SampleSet& s) {
  MomentAccumulator acc;
  for (auto v : s.values) acc.add(v);
  return acc;
}

MomentEstimate moment_from_samples(const SampleSet& s, ObservableKind kind, int order, int n, int m) {
  if (order < 1) throw Error(ErrorCode::usage, "moment order must be >= 1");
  MomentEstimate e{kind, order, 0.0, 0.0, s.values.size(), n, m, s.attempts};
  if (s.values.empty()) {
    e.estimate = e.se = std::nan("");
    return e;
  }
  if (order <= 2) {
    const MomentAccumulator acc = accumulate(s);
    e.estimate = static_cast<double>(order == 1 ? acc.mean() : acc.second_moment());
    e.se = static_cast<double>(order == 1 ? acc.mean_se() : acc.second_moment_se());
    return e;
  }
  // higher orders overflow exact sums; use long double on the stored values
  long double sum = 0, sum2 = 0;
  for (auto v : s.values) {
    const long double x = std::pow(static_cast<long double>(v), order);
    sum += x;
    sum2 += x * x;
  }
  const long double N = static_cast<long double>(s.values.size());
  e.estimate = static_cast<double>(sum / N);
  e.se = N > 1 ? static_cast<double>(std::sqrt(std::max(0.0L, (sum2 - sum * sum / N) / (N - 1)) / N))
               : std::nan("");
  return e;
}

MomentEstimate variance_from_samples(const SampleSet& s, ObservableKind kind, int n, int m) {
  if (s.values.size() < 2) throw Error(ErrorCode::usage, "variance needs at least 2 replicas");
  const MomentAccumulator acc = accumulate(s);
  return MomentEstimate{kind, 2, static_cast<double>(acc.variance()),
                        static_cast<double>(acc.variance_jackknife_se()), s.values.size(), n, m,
                        s.attempts};
}

MomentEstimate estimate_moment(ObservableKind kind, int order, int n, int m, std::uint64_t replicas,
                               std::uint64_t seed, const RunOptions& opts) {
  if (kind == ObservableKind::T) return moment_from_samples(collect_T(n, m, replicas, seed, opts), kind, order, n, m);
  return moment_from_samples(collect_S(n, replicas, seed, opts), kind, order, n, 2 * n);
}

MomentEstimate estimate_variance(ObservableKind kind, int n, int m, std::uint64_t replicas,
                                 std::uint64_t seed, const RunOptions& opts) {
  if (replicas < 2) throw Error(ErrorCode::usage, "variance needs at least 2 replicas");
  if (kind == ObservableKind::T) return variance_from_samples(collect_T(n, m, replicas, seed, opts), kind, n, m);
  return variance_from_samples(collect_S(n, replicas, seed, opts), kind, n, 2 * n);
}

double tail_threshold(int n, double epsilon) {
  return std::pow(static_cast<double>(n), 2.0 - 5.0 / 48.0 - epsilon);
}

Estimate tail_probability_S(int n, double threshold, std::uint64_t replicas, std::uint64_t seed,
                            const RunOptions& opts) {
  const SampleSet s = collect_S(n, replicas, seed, opts);
  MomentAccumulator acc;
  for (auto v : s.values) acc.add(static_cast<double>(v) >= threshold ? 1 : 0);
  return {static_cast<double>(acc.mean()), static_cast<double>(acc.mean_se())};
}

double ExactDistribution::moment_T(int order) const {
  long double s = 0.0L;
  for (std::size_t i = 0; i < size(); ++i)
    if (conditioned[i]) s += static_cast<long double>(prob[i]) * std::pow(static_cast<long double>(T[i]), order);
  return static_cast<double>(s / p_conditioning);
}

double ExactDistribution::variance_T() const {
  const long double m1 = moment_T(1);
  long double s = 0.0L;
  for (std::size_t i = 0; i < size(); ++i)
    if (conditioned[i]) s += static_cast<long double>(prob[i]) * (T[i] - m1) * (T[i] - m1);
  return static_cast<double>(s / p_conditioning);
}

std::map<std::uint32_t, double> ExactDistribution::distribution_T() const {
  std::map<std::uint32_t, long double> acc;
  for (std::size_t i = 0; i < size(); ++i)
    if (conditioned[i]) acc[T[i]] += prob[i];
  std::map<std::uint32_t, double> d;
  for (const auto& [t, w] : acc) d[t] = static_cast<double>(w / p_conditioning);
  return d;
}

ExactDistribution exact_enumerate(int n, double p) {
  const BoxRegion box(n);
  if (box.edge_count() > kMaxEnumerationEdges)
    throw Error(ErrorCode::region_too_large,
                "B(" + std::to_string(n) + ") has " + std::to_string(box.edge_count()) +
                    " edges; enumeration is limited to 26");
  ExactDistribution d;
  d.n = n;
  d.p = p;
  d.edges = box.edge_count();
  const std::size_t total = std::size_t{1} << d.edges;
  d.prob.resize(total);
  d.nu.assign(total, 0.0);
  d.T.assign(total, 0);
  d.conditioned.assign(total, 0);
  Configuration c(box);
  ClusterExplorer ex;
  for (std::size_t mask = 0; mask < total; ++mask) {
    if (!c.words().empty()) c.words()[0] = mask;
    const auto open = static_cast<int>(__builtin_popcountll(mask));
    d.prob[mask] = std::pow(p, open) * std::pow(1.0 - p, static_cast<double>(d.edges) - open);
    const auto t = observable_T(ex, c, n);
    if (t) {
      d.conditioned[mask] = 1;
      d.T[mask] = static_cast<std::uint32_t>(t->value);
      d.p_conditioning += d.prob[mask];
    }
  }
  if (d.p_conditioning <= 0.0)
    throw Error(ErrorCode::invariant, "conditioning event has zero probability");
  for (std::size_t mask = 0; mask < total; ++mask)
    if (d.conditioned[mask]) d.nu[mask] = d.prob[mask] / d.p_conditioning;
  return d;
}

}  // namespace perc
