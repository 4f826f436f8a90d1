#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace perc {

struct Rational {
  long long num = 0;
  long long den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  bool operator==(const Rational&) const = default;
};

Rational parse_rational(const std::string& s);  // "91/48" or "2"

// Named targets: one_arm 5/48, T_mean 91/48, T_var 91/24, arms (k^2-1)/12.
Rational arm_exponent(int k);

struct ScalingPoint {
  int n = 0;
  double estimate = 0.0;
  double se = 0.0;
  std::uint64_t samples = 0;
};

struct ScalingSeries {
  std::string label;
  std::vector<ScalingPoint> points;
};

struct FitOptions {
  bool log_correction = false;  // adds c / log n to the log-log model
};

struct ExponentEstimate {
  std::string label;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double chi2_per_dof = 0.0;
  bool weighted = true;  // false when some point has no usable standard error
  std::vector<int> scales;
  // slope change when the smallest scale is dropped (needs >= 4 scales)
  std::optional<double> finite_size_shift;
  std::optional<double> correction;
  std::string note;

  double fitted(int n) const;
};

ExponentEstimate fit_exponent(const ScalingSeries& series, const FitOptions& opts = {});

struct TargetSpec {
  Rational target;
  int sign = 1;  // -1 for decay exponents (estimate ~ n^-target)
  double tolerance = 0.0;
  double se_multiplier = 2.0;
};

struct Verdict {
  double exponent = 0.0;
  double target = 0.0;
  std::string target_rational;
  double deviation = 0.0;
  double allowed = 0.0;
  bool consistent = false;
};

Verdict compare_targets(const ExponentEstimate& est, const TargetSpec& spec);

}  // namespace perc
