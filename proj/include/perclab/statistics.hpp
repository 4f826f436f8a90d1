#pragma once

#include <cstdint>
#include <string>

namespace perc {

using Int128 = __int128;

std::string int128_to_string(Int128 v);
Int128 int128_from_string(const std::string& s);  // throws usage on malformed input

// Exact power sums of integer samples; merge is associative and commutative.
class MomentAccumulator {
 public:
  void add(std::int64_t v);
  void merge(const MomentAccumulator& o);

  std::uint64_t count() const { return n_; }
  Int128 sum(int order) const { return s_[order]; }  // order 1..4
  void set(std::uint64_t count, Int128 s1, Int128 s2, Int128 s3, Int128 s4);

  long double mean() const;
  long double mean_se() const;
  long double second_moment() const;
  long double second_moment_se() const;
  // unbiased sample variance and its delete-one jackknife standard error
  long double variance() const;
  long double variance_jackknife_se() const;
  long double central_sum2() const;
  long double central_sum4() const;

  bool operator==(const MomentAccumulator&) const = default;

 private:
  std::uint64_t n_ = 0;
  Int128 s_[5] = {0, 0, 0, 0, 0};
};

// Sum and sum of squares of real samples.
class RealAccumulator {
 public:
  void add(double v) {
    ++n_;
    s1_ += v;
    s2_ += v * v;
  }
  void merge(const RealAccumulator& o) {
    n_ += o.n_;
    s1_ += o.s1_;
    s2_ += o.s2_;
  }
  void set(std::uint64_t n, double s1, double s2) {
    n_ = n;
    s1_ = s1;
    s2_ = s2;
  }
  std::uint64_t count() const { return n_; }
  double sum() const { return s1_; }
  double sum_squares() const { return s2_; }
  double mean() const;
  double mean_se() const;

 private:
  std::uint64_t n_ = 0;
  double s1_ = 0.0;
  double s2_ = 0.0;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

}  // namespace perc
