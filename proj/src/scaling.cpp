#include "perclab/scaling.hpp"

#include <cmath>
#include <numeric>

#include "perclab/error.hpp"

namespace perc {

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational parse_rational(const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long num = std::stoll(s, &pos);
    if (pos == s.size()) return {num, 1};
    if (s[pos] != '/') throw Error(ErrorCode::usage, "");
    std::size_t pos2 = 0;
    const long long den = std::stoll(s.substr(pos + 1), &pos2);
    if (pos + 1 + pos2 != s.size() || den <= 0) throw Error(ErrorCode::usage, "");
    const long long g = std::gcd(num, den);
    return {num / g, den / g};
  } catch (...) {
    throw Error(ErrorCode::usage, "malformed rational '" + s + "'");
  }
}

Rational arm_exponent(int k) {
  if (k < 1) throw Error(ErrorCode::usage, "arm count must be >= 1");
  const long long num = static_cast<long long>(k) * k - 1;
  const long long g = std::gcd(num, 12LL);
  return {num / g, 12 / g};
}

double ExponentEstimate::fitted(int n) const {
  const double x = std::log(static_cast<double>(n));
  double y = intercept + slope * x;
  if (correction) y += *correction / x;
  return std::exp(y);
}

namespace {

// Weighted least squares on the given basis; returns coefficients and the
// inverse normal matrix.
bool solve_normal(const std::vector<std::vector<double>>& basis, const std::vector<double>& y,
                  const std::vector<double>& w, std::vector<double>& coef, std::vector<std::vector<double>>& inv) {
  const std::size_t p = basis.size();
  const std::size_t m = y.size();
  std::vector<std::vector<double>> a(p, std::vector<double>(2 * p + 1, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < m; ++k) a[i][j] += w[k] * basis[i][k] * basis[j][k];
    a[i][p + i] = 1.0;
    for (std::size_t k = 0; k < m; ++k) a[i][2 * p] += w[k] * basis[i][k] * y[k];
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) < 1e-300) return false;
    std::swap(a[c], a[piv]);
    const double d = a[c][c];
    for (auto& v : a[c]) v /= d;
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= 2 * p; ++j) a[r][j] -= f * a[c][j];
    }
  }
  coef.assign(p, 0.0);
  inv.assign(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    coef[i] = a[i][2 * p];
    for (std::size_t j = 0; j < p; ++j) inv[i][j] = a[i][p + j];
  }
  return true;
}

ExponentEstimate fit_core(const ScalingSeries& s, const FitOptions& opts) {
  const auto& pts = s.points;
  if (pts.size() < 3) throw Error(ErrorCode::usage, "fit needs at least 3 scales");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].n <= 0) throw Error(ErrorCode::usage, "scales must be positive");
    if (i > 0 && pts[i].n <= pts[i - 1].n) throw Error(ErrorCode::usage, "scales must be strictly increasing");
    if (!(pts[i].estimate > 0.0) || !std::isfinite(pts[i].estimate))
      throw Error(ErrorCode::nonpositive_estimate,
                  "estimate at n=" + std::to_string(pts[i].n) + " cannot be logged");
  }
  if (opts.log_correction && pts.size() < 4)
    throw Error(ErrorCode::usage, "the 1/log n correction needs at least 4 scales");
  ExponentEstimate e;
  e.label = s.label;
  const std::size_t m = pts.size();
  std::vector<double> x(m), y(m), w(m), one(m, 1.0), inv_x(m);
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = std::log(static_cast<double>(pts[i].n));
    y[i] = std::log(pts[i].estimate);
    inv_x[i] = 1.0 / x[i];
    const double rel = pts[i].se / pts[i].estimate;
    if (!(rel > 0.0) || !std::isfinite(rel)) e.weighted = false;
    w[i] = rel > 0.0 ? 1.0 / (rel * rel) : 0.0;
    e.scales.push_back(pts[i].n);
  }
  if (!e.weighted) std::fill(w.begin(), w.end(), 1.0);
  std::vector<std::vector<double>> basis{one, x};
  if (opts.log_correction) basis.push_back(inv_x);
  std::vector<double> coef;
  std::vector<std::vector<double>> inv;
  if (!solve_normal(basis, y, w, coef, inv)) throw Error(ErrorCode::usage, "degenerate fit");
  e.intercept = coef[0];
  e.slope = coef[1];
  if (opts.log_correction) e.correction = coef[2];
  double chi2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = y[i];
    for (std::size_t j = 0; j < basis.size(); ++j) r -= coef[j] * basis[j][i];
    chi2 += w[i] * r * r;
  }
  const double dof = static_cast<double>(m - basis.size());
  e.chi2_per_dof = dof > 0 ? chi2 / dof : 0.0;
  // unweighted fits take their scale from the residuals
  const double scale = e.weighted ? 1.0 : (dof > 0 ? chi2 / dof : 0.0);
  e.slope_se = std::sqrt(std::max(0.0, inv[1][1] * scale));
  return e;
}

}  // namespace

ExponentEstimate fit_exponent(const ScalingSeries& series, const FitOptions& opts) {
  ExponentEstimate e = fit_core(series, opts);
  if (series.points.size() >= 4 && (!opts.log_correction || series.points.size() >= 5)) {
    ScalingSeries rest = series;
    rest.points.erase(rest.points.begin());
    e.finite_size_shift = fit_core(rest, opts).slope - e.slope;
  }
  e.note = e.weighted ? "weighted by (estimate/se)^2" : "unweighted; slope se from residuals";
  return e;
}

Verdict compare_targets(const ExponentEstimate& est, const TargetSpec& spec) {
  Verdict v;
  v.exponent = spec.sign * est.slope;
  v.target = spec.target.value();
  v.target_rational = spec.target.str();
  v.deviation = std::abs(v.exponent - v.target);
  v.allowed = spec.tolerance + spec.se_multiplier * est.slope_se;
  v.consistent = v.deviation <= v.allowed;
  return v;
}

}  // namespace perc
