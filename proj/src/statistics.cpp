#include "perclab/statistics.hpp"

#include <cmath>
#include <limits>

#include "perclab/error.hpp"

namespace perc {

std::string int128_to_string(Int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  // work with the unsigned magnitude so the minimum value is handled
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
  std::string out;
  while (u > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) out.push_back('-');
  return {out.rbegin(), out.rend()};
}

Int128 int128_from_string(const std::string& s) {
  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
  if (i == s.size()) throw Error(ErrorCode::usage, "malformed integer '" + s + "'");
  unsigned __int128 u = 0;
  const unsigned __int128 limit = static_cast<unsigned __int128>(1) << 127;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') throw Error(ErrorCode::usage, "malformed integer '" + s + "'");
    const unsigned __int128 next = u * 10 + static_cast<unsigned>(s[i] - '0');
    if (next / 10 != u || next > limit) throw Error(ErrorCode::usage, "integer overflow '" + s + "'");
    u = next;
  }
  if (!neg && u == limit) throw Error(ErrorCode::usage, "integer overflow '" + s + "'");
  return neg ? static_cast<Int128>(-u) : static_cast<Int128>(u);
}

void MomentAccumulator::add(std::int64_t v) {
  const Int128 x = v;
  ++n_;
  s_[1] += x;
  s_[2] += x * x;
  s_[3] += x * x * x;
  s_[4] += x * x * x * x;
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
  n_ += o.n_;
  for (int k = 1; k <= 4; ++k) s_[k] += o.s_[k];
}

void MomentAccumulator::set(std::uint64_t count, Int128 s1, Int128 s2, Int128 s3, Int128 s4) {
  n_ = count;
  s_[1] = s1;
  s_[2] = s2;
  s_[3] = s3;
  s_[4] = s4;
}

namespace {
constexpr long double kNaN = std::numeric_limits<long double>::quiet_NaN();
}

long double MomentAccumulator::mean() const {
  return n_ == 0 ? kNaN : static_cast<long double>(s_[1]) / n_;
}

long double MomentAccumulator::second_moment() const {
  return n_ == 0 ? kNaN : static_cast<long double>(s_[2]) / n_;
}

long double MomentAccumulator::central_sum2() const {
  if (n_ == 0) return kNaN;
  // N*S2 - S1^2 is exact in 128 bits for the sample sizes used here
  const Int128 num = static_cast<Int128>(n_) * s_[2] - s_[1] * s_[1];
  return static_cast<long double>(num) / n_;
}

long double MomentAccumulator::central_sum4() const {
  if (n_ == 0) return kNaN;
  const long double N = n_;
  const long double mu = static_cast<long double>(s_[1]) / N;
  const long double s2 = static_cast<long double>(s_[2]);
  const long double s3 = static_cast<long double>(s_[3]);
  const long double s4 = static_cast<long double>(s_[4]);
  return s4 - 4 * mu * s3 + 6 * mu * mu * s2 - 3 * N * mu * mu * mu * mu;
}

long double MomentAccumulator::variance() const {
  if (n_ < 2) return kNaN;
  return central_sum2() / (n_ - 1);
}

long double MomentAccumulator::mean_se() const {
  if (n_ < 2) return kNaN;
  return std::sqrt(variance() / n_);
}

long double MomentAccumulator::second_moment_se() const {
  if (n_ < 2) return kNaN;
  const long double N = n_;
  const long double s2 = static_cast<long double>(s_[2]);
  const long double v = (static_cast<long double>(s_[4]) - s2 * s2 / N) / (N - 1);
  return std::sqrt(std::max(v, 0.0L) / N);
}

long double MomentAccumulator::variance_jackknife_se() const {
  if (n_ < 3) return kNaN;
  const long double N = n_;
  const long double m2 = central_sum2();
  const long double m4 = central_sum4();
  const long double v = N * (m4 - m2 * m2 / N) / ((N - 1) * (N - 2) * (N - 2));
  return std::sqrt(std::max(v, 0.0L));
}

double RealAccumulator::mean() const {
  return n_ == 0 ? std::numeric_limits<double>::quiet_NaN() : s1_ / static_cast<double>(n_);
}

double RealAccumulator::mean_se() const {
  if (n_ < 2) return std::numeric_limits<double>::quiet_NaN();
  const double N = static_cast<double>(n_);
  const double var = (s2_ - s1_ * s1_ / N) / (N - 1);
  return std::sqrt(std::max(var, 0.0) / N);
}

}  // namespace perc
