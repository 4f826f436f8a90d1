// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../support/oracles.hpp"
#include "perclab/arms.hpp"
#include "perclab/experiment.hpp"
#include "perclab/incipient.hpp"
#include "perclab/martingale.hpp"
#include "perclab/rng.hpp"
#include "perclab/scaling.hpp"
#include "perclab/series.hpp"

using namespace perc;

namespace {

const unsigned kWorkers = std::max(1u, std::thread::hardware_concurrency());
const std::vector<int> kGrid = {8, 16, 32, 64, 128};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 4) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*g", digits, v);
  return b;
}

Series run_series(ExperimentConfig cfg) {
  cfg.workers = kWorkers;
  const RunResult r = run_experiment(cfg);
  if (r.exit_code != 0) throw std::runtime_error(cfg.command + " run failed: " + r.error);
  return parse_csv(r.csv);
}

ScalingSeries pick(const Series& s, const std::string& observable, const std::vector<int>& grid) {
  ScalingSeries out;
  out.label = observable;
  for (int n : grid) {
    const SeriesRow* r = s.find(observable, n);
    if (!r) throw std::runtime_error("missing row " + observable + " n=" + std::to_string(n));
    out.points.push_back({n, r->estimate, r->se, r->samples});
  }
  return out;
}

std::string band(double v, double lo, double hi) { return num(v) + " in [" + num(lo) + ", " + num(hi) + "]"; }

// 1 -----------------------------------------------------------------------
Outcome exact_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExactDistribution d = exact_enumerate(1, 0.5);
  long double p_total = 0, nu_total = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    p_total += d.prob[i];
    nu_total += d.nu[i];
  }
  const MartingaleReport rep = verify_martingale_identities(1, 0.2);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::map<std::string, const IdentityCheck*> by;
  for (const auto& c : rep.checks) by[c.name] = &c;
  bool ok = d.size() == 4096 && std::abs(static_cast<double>(p_total) - 1) <= 1e-12 &&
            std::abs(static_cast<double>(nu_total) - 1) <= 1e-12 && rep.ok && secs < 1.0;
  for (const char* name : {"telescoping", "terminal_value", "variance_decomposition", "orthogonality",
                           "residual_normalization", "h_epsilon_symmetry"})
    ok = ok && by.count(name) && by[name]->ok;
  ok = ok && by["variance_decomposition"]->max_error <= 1e-9 && by["orthogonality"]->max_error <= 1e-9 &&
       by["residual_normalization"]->max_error <= 1e-12;
  // H_eps never fires at n = 1; the flip involution certifies the symmetry on
  // larger boxes (at p = 1/2 it pairs configurations of equal weight)
  std::size_t involution_configs = 0, involution_bad = 0;
  for (int n = 2; n <= 6; ++n)
    for (std::uint64_t r = 0; r < 200; ++r) {
      const Configuration c = sample_incipient(n, n, 4242, r);
      for (double eps : {0.2, 0.8}) {
        ++involution_configs;
        involution_bad += h_epsilon_involution_failure(c, eps).has_value();
      }
    }
  ok = ok && involution_bad == 0;
  return {ok, "4096 configs, |sum P - 1| = " + num(std::abs(static_cast<double>(p_total) - 1), 2) +
                  ", |sum nu - 1| = " + num(std::abs(static_cast<double>(nu_total) - 1), 2) +
                  ", var decomposition err " + num(by["variance_decomposition"]->max_error, 2) +
                  ", orthogonality err " + num(by["orthogonality"]->max_error, 2) + ", residual err " +
                  num(by["residual_normalization"]->max_error, 2) + ", H_eps open/closed mass diff " +
                  num(by["h_epsilon_symmetry"]->max_error, 2) + ", flip involution " +
                  std::to_string(involution_configs - involution_bad) + "/" + std::to_string(involution_configs) +
                  " at n=2..6, " + num(secs, 3) + " s"};
}

// 2 -----------------------------------------------------------------------
Outcome sampler_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExactDistribution d = exact_enumerate(1, 0.5);
  RunOptions o;
  o.workers = kWorkers;
  const std::uint64_t N = 100000;
  const SampleSet s = collect_T(1, 1, N, 2718, o);
  std::map<std::int64_t, std::uint64_t> hits;
  for (auto v : s.values) ++hits[v];
  double worst = 0;
  bool ok = true;
  for (const auto& [t, p] : d.distribution_T()) {
    const double f = static_cast<double>(hits[t]) / N;
    const double se = std::sqrt(p * (1 - p) / N);
    worst = std::max(worst, std::abs(f - p) / se);
    hits.erase(t);
  }
  ok = worst <= 3.0 && hits.empty();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs < 60;
  return {ok, "worst atom |z| = " + num(worst, 3) + " over " + std::to_string(d.distribution_T().size()) +
                  " atoms, 1e5 samples, " + num(secs, 3) + " s"};
}

// 3 -----------------------------------------------------------------------
Outcome self_duality() {
  ExperimentConfig cfg;
  cfg.command = "crossing";
  cfg.n_grid = {4, 8, 16};
  cfg.replicas = 100000;
  cfg.seed = 31415;
  cfg.workers = kWorkers;
  const RunResult r = run_experiment(cfg);  // also runs the exhaustive 2x1 check
  if (r.exit_code != 0) return {false, "crossing run failed: " + r.error};
  const Series s = parse_csv(r.csv);
  std::string detail;
  bool ok = true;
  for (int n : cfg.n_grid) {
    const SeriesRow* row = s.find("crossing", n);
    const double z = (row->estimate - 0.5) / row->se;
    ok = ok && std::abs(z) <= 4;
    detail += "n=" + std::to_string(n) + " " + num(row->estimate, 5) + " (z " + num(z, 2) + ") ";
  }
  // exhaustive 2x1: every configuration of the 5 edges of [0,2]x[0,1]
  int open = 0, total = 0;
  Configuration c(BoxRegion(2));
  const std::vector<Edge> edges = {{{0, 0}, Orientation::horizontal}, {{1, 0}, Orientation::horizontal},
                                   {{0, 1}, Orientation::horizontal}, {{1, 1}, Orientation::horizontal},
                                   {{1, 0}, Orientation::vertical}};
  for (int mask = 0; mask < 32; ++mask) {
    for (std::size_t i = 0; i < edges.size(); ++i) c.set_open(edges[i], mask >> i & 1);
    const CrossingResult x = rectangle_crossings(c, 1);
    ok = ok && x.open_crossing == oracle::rectangle_open_crossing(c, 1) && x.open_crossing != x.closed_crossing;
    open += x.open_crossing;
    ++total;
  }
  ok = ok && 2 * open == total;
  return {ok, detail + "| 2x1 exhaustive " + std::to_string(open) + "/" + std::to_string(total)};
}

// 4 -----------------------------------------------------------------------
Outcome menger() {
  int checked = 0, bad = 0;
  std::map<int, int> open_hist, closed_hist;
  for (auto [m, n] : {std::pair{1, 3}, std::pair{1, 4}}) {
    for (std::uint64_t r = 0; r < 100; ++r) {
      const double p = 0.3 + 0.4 * static_cast<double>(r % 5) / 4;  // 0.3 .. 0.7
      const Configuration c = sample_configuration(BoxRegion(n), p, 1618 + n, r);
      const int fo = count_disjoint_open_crossings(c, m, n), fc = count_disjoint_closed_crossings(c, m, n);
      const int bo = oracle::max_open_arms(c, m, n), bc = oracle::max_closed_arms(c, m, n);
      ++checked;
      bad += fo != bo || fc != bc;
      ++open_hist[bo];
      ++closed_hist[bc];
    }
  }
  std::string spread = "open counts seen:";
  for (auto [k, v] : open_hist) spread += " " + std::to_string(k) + "x" + std::to_string(v);
  spread += ", closed:";
  for (auto [k, v] : closed_hist) spread += " " + std::to_string(k) + "x" + std::to_string(v);
  return {bad == 0, std::to_string(checked - bad) + "/" + std::to_string(checked) +
                        " instances on A(1,3), A(1,4) agree with exhaustive packing (" + spread + ")"};
}

// 5, 6 --------------------------------------------------------------------
Series g_arms;

Outcome arms_fit(const std::string& observable, double lo, double hi, const std::string& label) {
  const ExponentEstimate e = fit_exponent(pick(g_arms, observable, kGrid));
  const double slope = -e.slope;  // slope of -log P against log n
  return {slope >= lo && slope <= hi, label + " slope " + band(slope, lo, hi) + " (se " + num(e.slope_se, 2) +
                                          ", chi2/dof " + num(e.chi2_per_dof, 3) + ")"};
}

// 7, 8, 9 ------------------------------------------------------------------
Series g_T, g_S;

Outcome moment_fits(const Series& s, const std::string& prefix) {
  const ExponentEstimate m = fit_exponent(pick(s, prefix + "_mean", kGrid));
  const ExponentEstimate v = fit_exponent(pick(s, prefix + "_var", kGrid));
  const bool ok = m.slope >= 1.70 && m.slope <= 2.00 && v.slope >= 3.3 && v.slope <= 4.1;
  return {ok, "E " + prefix + " slope " + band(m.slope, 1.70, 2.00) + " (se " + num(m.slope_se, 2) + "), var slope " +
                  band(v.slope, 3.3, 4.1) + " (se " + num(v.slope_se, 2) + ")"};
}

Outcome lower_tail() {
  bool ok = true;
  std::string detail;
  for (int n : {8, 16, 32, 64}) {
    const SeriesRow* r = g_S.find("S_tail", n);
    ok = ok && r->estimate >= 0.05;
    detail += "n=" + std::to_string(n) + " " + num(r->estimate) + " ";
  }
  return {ok, "P(S_n >= n^(2-5/48-0.2)): " + detail};
}

// 10 ----------------------------------------------------------------------
Outcome structural() {
  const MartingaleReport rep = verify_martingale_identities(1, 0.2);
  bool unique = false, nesting = false;
  for (const auto& c : rep.checks) {
    if (c.name == "uniqueness") unique = c.ok;
    if (c.name == "filtration_nesting") nesting = c.ok;
  }
  std::size_t configs = 0, records = 0, disjoint_bad = 0, record_bad = 0, flip_bad = 0, edges_checked = 0;
  std::string first;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    const int n = 1 + static_cast<int>(r % 6);
    // half from the conditioned measure (where bubbles live), half unconditioned
    const Configuration c =
        r % 2 ? sample_incipient(n, n, 777, r) : sample_configuration(BoxRegion(n), 0.5, 778, r);
    ++configs;
    const BubbleDecomposition d = bubble_decomposition(c);
    if (disjoint_property_violation(c, d)) ++disjoint_bad;
    const PivotalScanner scan(c);
    const BoxRegion& b = c.region();
    for (std::size_t ei = 0; ei < b.edge_count(); ++ei) {
      const Edge e = b.edge_at(ei);
      const bool want = oracle::pivotal_by_flip(c, {e.lo.x, e.lo.y}, {e.hi().x, e.hi().y});
      const auto rec = is_pivotal(c, e);
      ++edges_checked;
      if (rec.has_value() != want || scan.classify(ei).pivotal != want) ++flip_bad;
      if (rec) {
        ++records;
        if (const auto why = validate_pivotal_record(c, *rec)) {
          if (first.empty()) first = *why;
          ++record_bad;
        }
      }
    }
  }
  const bool ok = unique && nesting && disjoint_bad == 0 && record_bad == 0 && flip_bad == 0;
  return {ok, std::string("uniqueness at n=1 (4096 configs) ") + (unique ? "ok" : "FAILED") + "; " +
                  std::to_string(configs) + " configs n<=6: disjoint violations " + std::to_string(disjoint_bad) +
                  ", invalid circuits " + std::to_string(record_bad) + "/" + std::to_string(records) +
                  ", pivotal/flip mismatches " + std::to_string(flip_bad) + "/" + std::to_string(edges_checked) +
                  (first.empty() ? "" : " first: " + first)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  };

  report(1, exact_oracle);
  report(2, sampler_exactness);
  report(3, self_duality);
  report(4, menger);
  {
    ExperimentConfig cfg;
    cfg.command = "arms";
    cfg.n_grid = kGrid;
    cfg.m_inner = 1;
    cfg.replicas = 100000;
    cfg.seed = 5048;
    // (2,2) is rare at large n: keep going until 1000 events or 4e5 replicas
    cfg.min_events = 1000;
    cfg.max_replicas = 400000;
    report(5, [&] {
      g_arms = run_series(cfg);
      return arms_fit("Q_1_0", 0.05, 0.18, "(1,0)");
    });
    report(6, [&] {
      const Outcome a = arms_fit("Q_1_1", 0.13, 0.40, "(1,1)");
      const Outcome b = arms_fit("Q_2_2", 0.9, 1.6, "(2,2)");
      return Outcome{a.pass && b.pass, a.detail + "; " + b.detail};
    });
  }
  report(7, [] {
    ExperimentConfig cfg;
    cfg.command = "incipient";
    cfg.n_grid = kGrid;
    cfg.m_rule = "2n";
    cfg.replicas = 20000;
    cfg.seed = 9148;
    g_T = run_series(cfg);
    return moment_fits(g_T, "T");
  });
  report(8, [] {
    ExperimentConfig cfg;
    cfg.command = "sn";
    cfg.n_grid = kGrid;
    cfg.replicas = 100000;
    cfg.seed = 9124;
    cfg.epsilon = 0.2;
    g_S = run_series(cfg);
    return moment_fits(g_S, "S");
  });
  report(9, lower_tail);
  report(10, structural);

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
