#include "perclab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "perclab/arms.hpp"
#include "perclab/incipient.hpp"
#include "perclab/martingale.hpp"
#include "perclab/parallel.hpp"
#include "perclab/rng.hpp"
#include "perclab/scaling.hpp"
#include "perclab/series.hpp"

namespace perc {

using json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (v.empty() || v[0] == '-') throw 0;
    const unsigned long long x = std::stoull(v, &pos, 0);
    if (pos != v.size()) throw 0;
    return x;
  } catch (...) {
    throw Error(ErrorCode::usage, key + ": expected a nonnegative integer, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw 0;
    return x;
  } catch (...) {
    throw Error(ErrorCode::usage, key + ": expected an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw 0;
    return x;
  } catch (...) {
    throw Error(ErrorCode::usage, key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::usage, key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v + ",") {
    if (c == ',') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

const std::vector<std::string> kCommands = {"oracle", "incipient", "sn", "arms", "pivotal",
                                            "bubble", "crossing", "fit", "merge"};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(raw_value);
  if (key == "command") {
    if (std::find(kCommands.begin(), kCommands.end(), v) == kCommands.end())
      throw Error(ErrorCode::usage, "unknown command '" + v + "'");
    cfg.command = v;
  } else if (key == "n") {
    cfg.n_grid = {to_int(key, v)};
  } else if (key == "n_grid") {
    cfg.n_grid.clear();
    for (const auto& t : split_list(v)) cfg.n_grid.push_back(to_int(key, t));
    if (cfg.n_grid.empty()) throw Error(ErrorCode::usage, "n_grid is empty");
  } else if (key == "m") {
    if (v != "n" && v != "2n") (void)to_int(key, v);
    cfg.m_rule = v;
  } else if (key == "m_inner") {
    cfg.m_inner = to_int(key, v);
  } else if (key == "replicas" || key == "samples") {
    cfg.replicas = to_u64(key, v);
  } else if (key == "replica_offset") {
    cfg.replica_offset = to_u64(key, v);
  } else if (key == "seed") {
    cfg.seed = to_u64(key, v);
  } else if (key == "workers") {
    cfg.workers = static_cast<unsigned>(std::max<std::uint64_t>(1, to_u64(key, v)));
  } else if (key == "epsilon") {
    cfg.epsilon = to_double(key, v);
  } else if (key == "p") {
    cfg.p = to_double(key, v);
  } else if (key == "max_attempts") {
    cfg.max_attempts = to_u64(key, v);
  } else if (key == "min_events") {
    cfg.min_events = to_u64(key, v);
  } else if (key == "max_replicas") {
    cfg.max_replicas = to_u64(key, v);
  } else if (key == "mc_inner") {
    cfg.mc_inner = to_u64(key, v);
  } else if (key == "direct_replicas") {
    cfg.direct_replicas = to_u64(key, v);
  } else if (key == "csv") {
    cfg.csv_path = v;
  } else if (key == "json") {
    cfg.json_path = v;
  } else if (key == "format") {
    if (v != "csv" && v != "json") throw Error(ErrorCode::usage, "format must be csv or json");
    cfg.format = v;
  } else if (key == "golden") {
    cfg.golden_path = v;
  } else if (key == "input") {
    for (const auto& t : split_list(v)) cfg.inputs.push_back(t);
  } else if (key == "observable") {
    cfg.observable = v;
  } else if (key == "target") {
    (void)parse_rational(v);
    cfg.target = v;
  } else if (key == "decay") {
    cfg.decay = to_bool(key, v);
  } else if (key == "correction") {
    cfg.log_correction = to_bool(key, v);
  } else if (key == "tolerance") {
    cfg.tolerance = to_double(key, v);
  } else {
    throw Error(ErrorCode::usage, "unknown configuration key '" + raw_key + "'");
  }
}

void load_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::usage, "config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  load_config_text(cfg, read_text_file(path));
}

void apply_environment(ExperimentConfig& cfg) {
  if (const char* s = std::getenv("PERCLAB_SEED"); s != nullptr && *s != '\0')
    cfg.seed = to_u64("PERCLAB_SEED", s);
}

int conditioning_scale(const ExperimentConfig& cfg, int n) {
  if (cfg.m_rule == "2n") return 2 * n;
  if (cfg.m_rule == "n") return n;
  return to_int("m", cfg.m_rule);
}

std::string canonical_config(const ExperimentConfig& cfg) {
  std::ostringstream s;
  s << "command=" << cfg.command << ";n_grid=";
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) s << (i ? "," : "") << cfg.n_grid[i];
  s << ";m=" << cfg.m_rule << ";m_inner=" << cfg.m_inner << ";seed=" << cfg.seed
    << ";epsilon=" << format_double(cfg.epsilon) << ";p=" << format_double(cfg.p)
    << ";min_events=" << cfg.min_events << ";max_replicas=" << cfg.max_replicas
    << ";mc_inner=" << cfg.mc_inner << ";direct_replicas=" << cfg.direct_replicas
    << ";observable=" << cfg.observable << ";target=" << cfg.target << ";decay=" << cfg.decay
    << ";correction=" << cfg.log_correction << ";tolerance=" << format_double(cfg.tolerance);
  return s.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_config(cfg))));
  return buf;
}

std::uint64_t scale_seed(const ExperimentConfig& cfg, int n, int m) {
  return derive_seed(cfg.seed, {fnv1a(cfg.command), static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(m)});
}

namespace {

struct TargetInfo {
  const char* observable;
  Rational rational;
  int sign;
};

std::vector<TargetInfo> targets_for(const std::string& command) {
  if (command == "incipient")
    return {{"T_mean", {91, 48}, 1}, {"T_m2", {91, 24}, 1}, {"T_var", {91, 24}, 1}};
  if (command == "sn")
    return {{"S_mean", {91, 48}, 1}, {"S_m2", {91, 24}, 1}, {"S_var", {91, 24}, 1}};
  if (command == "arms")
    return {{"Q_1_0", {5, 48}, -1}, {"Q_1_1", arm_exponent(2), -1}, {"Q_2_2", arm_exponent(4), -1}};
  return {};
}

struct Context {
  const ExperimentConfig& cfg;
  Series series;
  json checks = json::array();
  json fits = json::array();
  json extra = json::object();
  bool checks_ok = true;
  std::string csv_override;  // commands with their own CSV layout

  void check(const std::string& name, bool ok, const std::string& detail, double value = 0.0,
             double tolerance = 0.0) {
    checks.push_back({{"name", name}, {"ok", ok}, {"value", value}, {"tolerance", tolerance}, {"detail", detail}});
    if (!ok) checks_ok = false;
  }
};

SeriesRow int_row(const std::string& name, int n, int m, const MomentAccumulator& acc, std::uint64_t attempts) {
  SeriesRow r;
  r.observable = name;
  r.n = n;
  r.m = m;
  r.sums = acc;
  r.attempts = attempts;
  r.finalize();
  return r;
}

SeriesRow exact_row(const std::string& name, int n, int m, double value, std::uint64_t samples) {
  SeriesRow r;
  r.observable = name;
  r.n = n;
  r.m = m;
  r.estimate = value;
  r.se = 0.0;
  r.samples = samples;
  return r;
}

RunOptions options(const ExperimentConfig& cfg) {
  RunOptions o;
  o.p = cfg.p;
  o.workers = cfg.workers;
  o.max_attempts = cfg.max_attempts;
  o.replica_offset = cfg.replica_offset;
  return o;
}

void require_grid(const ExperimentConfig& cfg, int min_n) {
  if (cfg.n_grid.empty()) throw Error(ErrorCode::usage, "empty n grid");
  for (int n : cfg.n_grid)
    if (n < min_n) throw Error(ErrorCode::usage, "n must be >= " + std::to_string(min_n));
}

bool within(double est, double se, double target, double k) {
  if (!(se > 0)) return est == target;
  return std::abs(est - target) <= k * se;
}

std::string fmt(double v) { return format_double(v); }

json golden_json(const ExactDistribution& d) {
  json dist = json::object();
  for (const auto& [v, pr] : d.distribution_T()) dist[std::to_string(v)] = pr;
  return {{"schema_version", kSchemaVersion}, {"n", d.n}, {"m", d.n}, {"configurations", d.size()},
          {"P_conditioning", d.p_conditioning}, {"E_T", d.moment_T(1)}, {"E_T2", d.moment_T(2)},
          {"var_T", d.variance_T()}, {"distribution_T", dist}};
}

void run_oracle(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  if (cfg.p != 0.5) throw Error(ErrorCode::usage, "the oracle is defined at p = 1/2");
  const ExactDistribution d = exact_enumerate(1, 0.5);
  auto& rows = ctx.series.rows;
  rows.push_back(exact_row("T_exact_mean", 1, 1, d.moment_T(1), d.size()));
  rows.push_back(exact_row("T_exact_m2", 1, 1, d.moment_T(2), d.size()));
  rows.push_back(exact_row("T_exact_var", 1, 1, d.variance_T(), d.size()));
  rows.push_back(exact_row("P_conditioning", 1, 1, d.p_conditioning, d.size()));
  for (const auto& [v, pr] : d.distribution_T())
    rows.push_back(exact_row("T_atom_" + std::to_string(v), 1, 1, pr, d.size()));
  const MartingaleReport rep = verify_martingale_identities(1, cfg.epsilon);
  for (const auto& c : rep.checks) ctx.check(c.name, c.ok, c.detail, c.max_error, c.tolerance);
  const std::string path = cfg.golden_path.empty() ? "golden.json" : cfg.golden_path;
  write_text_file(path, golden_json(d).dump(2) + "\n");
  ctx.extra["golden_path"] = path;
  ctx.extra["golden"] = golden_json(d);
}

void golden_checks(Context& ctx, const SampleSet& samples, const MomentAccumulator& acc, int n, int m) {
  const ExperimentConfig& cfg = ctx.cfg;
  if (cfg.golden_path.empty() || n != 1 || m != 1) return;
  json g;
  try {
    g = json::parse(read_text_file(cfg.golden_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::io, "malformed golden file " + cfg.golden_path + ": " + e.what());
  }
  const double gm = g.at("E_T").get<double>();
  const double g2 = g.at("E_T2").get<double>();
  const double gv = g.at("var_T").get<double>();
  const double mean = static_cast<double>(acc.mean()), mse = static_cast<double>(acc.mean_se());
  const double m2 = static_cast<double>(acc.second_moment()), m2se = static_cast<double>(acc.second_moment_se());
  const double var = static_cast<double>(acc.variance()), vse = static_cast<double>(acc.variance_jackknife_se());
  ctx.check("golden_T_mean", within(mean, mse, gm, 3.0), "estimate " + fmt(mean) + " golden " + fmt(gm),
            (mean - gm) / mse, 3.0);
  ctx.check("golden_T_m2", within(m2, m2se, g2, 3.0), "estimate " + fmt(m2) + " golden " + fmt(g2),
            (m2 - g2) / m2se, 3.0);
  ctx.check("golden_T_var", within(var, vse, gv, 3.0), "estimate " + fmt(var) + " golden " + fmt(gv),
            (var - gv) / vse, 3.0);
  // atoms; anything the oracle gives zero mass must never be sampled
  std::map<std::int64_t, std::uint64_t> hits;
  for (auto v : samples.values) ++hits[v];
  const double total = static_cast<double>(samples.values.size());
  for (const auto& [key, val] : g.at("distribution_T").items()) {
    const std::int64_t t = std::stoll(key);
    const double pg = val.get<double>();
    const double ph = static_cast<double>(hits[t]) / total;
    const double se = std::sqrt(pg * (1 - pg) / total);
    ctx.check("golden_T_atom_" + key, within(ph, se, pg, 3.0), "frequency " + fmt(ph) + " golden " + fmt(pg),
              se > 0 ? (ph - pg) / se : 0.0, 3.0);
    hits.erase(t);
  }
  std::uint64_t stray = 0;
  for (const auto& [t, c] : hits) stray += c;
  ctx.check("golden_T_support", stray == 0, std::to_string(stray) + " samples outside the oracle support");
}

void run_incipient(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  require_grid(cfg, 0);
  for (int n : cfg.n_grid) {
    const int m = conditioning_scale(cfg, n);
    if (m < n) throw Error(ErrorCode::usage, "conditioning scale m must be >= n");
    const SampleSet s = collect_T(n, m, cfg.replicas, scale_seed(cfg, n, m), options(cfg));
    const MomentAccumulator acc = accumulate(s);
    ctx.series.rows.push_back(int_row("T_mean", n, m, acc, s.attempts));
    ctx.series.rows.push_back(int_row("T_m2", n, m, acc, s.attempts));
    ctx.series.rows.push_back(int_row("T_var", n, m, acc, s.attempts));
    if (acc.count() > 0 && acc.second_moment() < acc.mean() * acc.mean() * (1 - 1e-15L))
      throw Error(ErrorCode::invariant, "E T^2 < (E T)^2");
    golden_checks(ctx, s, acc, n, m);
  }
}

void run_sn(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  require_grid(cfg, 1);
  for (int n : cfg.n_grid) {
    const SampleSet s = collect_S(n, cfg.replicas, scale_seed(cfg, n, 2 * n), options(cfg));
    const MomentAccumulator acc = accumulate(s);
    const double threshold = tail_threshold(n, cfg.epsilon);
    MomentAccumulator tail;
    for (auto v : s.values) tail.add(static_cast<double>(v) >= threshold ? 1 : 0);
    ctx.series.rows.push_back(int_row("S_mean", n, 2 * n, acc, s.attempts));
    ctx.series.rows.push_back(int_row("S_m2", n, 2 * n, acc, s.attempts));
    ctx.series.rows.push_back(int_row("S_var", n, 2 * n, acc, s.attempts));
    ctx.series.rows.push_back(int_row("S_tail", n, 2 * n, tail, s.attempts));
  }
  ctx.extra["tail_exponent"] = "n^(2-5/48-epsilon)";
}

void run_arms(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  require_grid(cfg, 1);
  for (int n : cfg.n_grid) {
    const int m = cfg.m_inner;
    if (m < 0 || m >= n) throw Error(ErrorCode::usage, "arms need 0 <= m_inner < n");
    const std::uint64_t seed = scale_seed(cfg, n, m);
    const BoxRegion box(n);
    MomentAccumulator q10, q11, q22;
    std::uint64_t done = 0;
    const unsigned workers = std::max(1u, cfg.workers);
    struct Scratch {
      Configuration config;
      ArmDetector detector;
    };
    std::vector<std::unique_ptr<Scratch>> scratch(workers);
    auto batch = [&](std::uint64_t count) {
      std::vector<std::uint8_t> res(count, 0);
      parallel_for(count, workers, [&](std::uint64_t i, unsigned w) {
        if (!scratch[w]) scratch[w] = std::make_unique<Scratch>(Scratch{Configuration(box), {}});
        resample(scratch[w]->config, cfg.p, seed, cfg.replica_offset + done + i, 0);
        const ArmResult r = scratch[w]->detector.capped_counts(scratch[w]->config, m, n, 2, 2);
        res[i] = static_cast<std::uint8_t>((r.max_open_disjoint >= 1) | ((r.max_open_disjoint >= 1 && r.max_closed_disjoint >= 1) << 1) |
                                           ((r.max_open_disjoint >= 2 && r.max_closed_disjoint >= 2) << 2));
      });
      for (auto v : res) {
        q10.add(v & 1);
        q11.add((v >> 1) & 1);
        q22.add((v >> 2) & 1);
      }
      done += count;
    };
    batch(cfg.replicas);
    if (cfg.min_events > 0 && cfg.replicas > 0) {
      while (q22.sum(1) < static_cast<Int128>(cfg.min_events) && done < cfg.max_replicas)
        batch(std::min(cfg.replicas, cfg.max_replicas - done));
    }
    ctx.series.rows.push_back(int_row("Q_1_0", n, m, q10, done));
    ctx.series.rows.push_back(int_row("Q_1_1", n, m, q11, done));
    ctx.series.rows.push_back(int_row("Q_2_2", n, m, q22, done));
  }
}

void run_pivotal(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  require_grid(cfg, 1);
  for (int n : cfg.n_grid) {
    const std::uint64_t seed = scale_seed(cfg, n, n);
    const unsigned workers = std::max(1u, cfg.workers);
    std::vector<std::unique_ptr<ConditionedSampler>> samplers(workers);
    std::vector<std::int64_t> open(cfg.replicas), closed(cfg.replicas);
    std::vector<std::uint64_t> attempts(cfg.replicas);
    const std::uint64_t involution_checks = std::min<std::uint64_t>(cfg.replicas, 100);
    std::vector<std::uint8_t> involution_bad(cfg.replicas, 0);
    parallel_for(cfg.replicas, workers, [&](std::uint64_t i, unsigned w) {
      if (!samplers[w]) samplers[w] = std::make_unique<ConditionedSampler>(n, seed, cfg.p, cfg.max_attempts);
      samplers[w]->sample(cfg.replica_offset + i, n);
      attempts[i] = samplers[w]->last_attempts();
      for (const auto& h : detect_H_epsilon(samplers[w]->configuration(), cfg.epsilon))
        ++(h.edge_open ? open : closed)[i];
      if (i < involution_checks && h_epsilon_involution_failure(samplers[w]->configuration(), cfg.epsilon))
        involution_bad[i] = 1;
    });
    MomentAccumulator any, o, c, diff;
    std::uint64_t att = 0;
    for (std::uint64_t i = 0; i < cfg.replicas; ++i) {
      any.add(open[i] + closed[i] > 0 ? 1 : 0);
      o.add(open[i]);
      c.add(closed[i]);
      diff.add(open[i] - closed[i]);
      att += attempts[i];
    }
    ctx.series.rows.push_back(int_row("H_any", n, n, any, att));
    ctx.series.rows.push_back(int_row("H_open", n, n, o, att));
    ctx.series.rows.push_back(int_row("H_closed", n, n, c, att));
    ctx.series.rows.push_back(int_row("H_diff", n, n, diff, att));
    const double d = static_cast<double>(diff.mean()), dse = static_cast<double>(diff.mean_se());
    ctx.check("h_epsilon_symmetry_n" + std::to_string(n), within(d, dse, 0.0, 3.0),
              "open-closed mean " + fmt(d) + " se " + fmt(dse), dse > 0 ? d / dse : 0.0, 3.0);
    const auto bad = std::count(involution_bad.begin(), involution_bad.end(), 1);
    ctx.check("h_epsilon_involution_n" + std::to_string(n), bad == 0,
              std::to_string(bad) + " of " + std::to_string(involution_checks) + " configurations");
  }
}

void run_bubble(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  require_grid(cfg, 1);
  for (int n : cfg.n_grid) {
    if (n == 1) {
      const MartingaleReport rep = verify_martingale_identities(1, cfg.epsilon);
      for (const auto& c : rep.checks) {
        ctx.check(c.name, c.ok, c.detail, c.max_error, c.tolerance);
        ctx.series.rows.push_back(exact_row("identity_" + c.name, 1, 1, c.max_error, rep.configurations));
      }
      ctx.series.rows.push_back(exact_row("T_exact_var", 1, 1, rep.variance_T, rep.configurations));
      ctx.series.rows.push_back(exact_row("identity_sum_delta_sq", 1, 1, rep.sum_delta_sq, rep.configurations));
      json nonadapted = rep.nonadapted, atoms = rep.atoms;
      ctx.extra["n1"] = {{"max_sets", rep.max_sets}, {"atoms", atoms}, {"nonadapted_union_atoms", nonadapted},
                         {"nonsingle_configurations", rep.nonsingle_configurations},
                         {"first_failure", rep.first_failure}, {"witness", rep.witness}};
      continue;
    }
    const std::uint64_t seed = scale_seed(cfg, n, n);
    if (cfg.mc_inner > 0) {
      const std::uint64_t direct = cfg.direct_replicas ? cfg.direct_replicas : 10 * cfg.replicas;
      const DeltaSquareEstimate est =
          estimate_delta_square_sum(n, cfg.replicas, cfg.mc_inner, direct, seed, options(cfg));
      SeriesRow r;
      r.observable = "delta_sq_sum";
      r.n = n;
      r.m = n;
      r.real = est.per_outer;
      r.attempts = est.inner_draws;
      r.finalize();
      ctx.series.rows.push_back(r);
      ctx.series.rows.push_back(int_row("T_var", n, n, est.direct, est.direct.count()));
      ctx.check("delta_sq_vs_variance_n" + std::to_string(n), std::abs(est.z) <= 3.0,
                "sum " + fmt(est.sum_delta_sq.value) + " direct " + fmt(est.direct_variance.value), est.z, 3.0);
    }

    // structure of the decompositions on independent nu_n samples
    ConditionedSampler sampler(n, derive_seed(seed, {7}), cfg.p, cfg.max_attempts);
    MomentAccumulator sets, nonsingle, condition;
    std::uint64_t structural_failures = 0;
    std::string first;
    for (std::uint64_t i = 0; i < cfg.replicas; ++i) {
      sampler.sample(cfg.replica_offset + i, n);
      const Configuration& c = sampler.configuration();
      const BubbleDecomposition d = bubble_decomposition(c);
      std::int64_t ns = 0, cond = 0;
      for (const BubbleSet& s : d.sets) {
        if (s.kind == BubbleKind::single) continue;
        ++ns;
        cond += s.bubble_condition;
        const auto rec = is_pivotal(c, c.region().edge_at(s.pivotal_edge));
        const auto bad = rec ? validate_pivotal_record(c, *rec) : std::optional<std::string>("not pivotal");
        if (bad) {
          ++structural_failures;
          if (first.empty()) first = *bad;
        }
      }
      if (disjoint_property_violation(c, d)) {
        ++structural_failures;
        if (first.empty()) first = "disjoint property";
      }
      sets.add(static_cast<std::int64_t>(d.sets.size()));
      nonsingle.add(ns);
      condition.add(cond);
    }
    ctx.series.rows.push_back(int_row("bubble_sets", n, n, sets, sampler.attempts()));
    ctx.series.rows.push_back(int_row("bubble_nonsingle", n, n, nonsingle, sampler.attempts()));
    ctx.series.rows.push_back(int_row("bubble_condition", n, n, condition, sampler.attempts()));
    ctx.check("bubble_structure_n" + std::to_string(n), structural_failures == 0,
              structural_failures ? first : "circuits valid, disjoint property holds",
              static_cast<double>(structural_failures), 0.0);
  }
}

void run_crossing(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  require_grid(cfg, 1);
  {
    // every configuration of the 2 x 1 rectangle
    const BoxRegion box(2);
    std::vector<std::size_t> edges;
    for (int x = 0; x <= 1; ++x)
      for (int y = 0; y <= 1; ++y) edges.push_back(box.edge_index(Edge{{x, y}, Orientation::horizontal}));
    edges.push_back(box.edge_index(Edge{{1, 0}, Orientation::vertical}));
    int open = 0, total = 0, exclusive = 0;
    enumerate_subset(Configuration(box), edges, 0.5, [&](const Configuration& c, double) {
      const CrossingResult r = rectangle_crossings(c, 1);
      ++total;
      open += r.open_crossing;
      exclusive += r.open_crossing != r.closed_crossing;
    });
    ctx.check("crossing_exhaustive_2x1", open * 2 == total && exclusive == total,
              std::to_string(open) + " of " + std::to_string(total) + " configurations cross");
  }
  for (int n : cfg.n_grid) {
    const std::uint64_t seed = scale_seed(cfg, n, n + 1);
    const BoxRegion box(n + 1);
    const unsigned workers = std::max(1u, cfg.workers);
    std::vector<std::unique_ptr<Configuration>> scratch(workers);
    std::vector<std::uint8_t> res(cfg.replicas, 0);
    parallel_for(cfg.replicas, workers, [&](std::uint64_t i, unsigned w) {
      if (!scratch[w]) scratch[w] = std::make_unique<Configuration>(box);
      resample(*scratch[w], cfg.p, seed, cfg.replica_offset + i, 0);
      const CrossingResult r = rectangle_crossings(*scratch[w], n);
      if (r.open_crossing == r.closed_crossing)
        throw Error(ErrorCode::invariant, "rectangle duality violated at replica " +
                                              std::to_string(cfg.replica_offset + i));
      res[i] = r.open_crossing;
    });
    MomentAccumulator acc;
    for (auto v : res) acc.add(v);
    ctx.series.rows.push_back(int_row("crossing", n, n + 1, acc, cfg.replicas));
    const double est = static_cast<double>(acc.mean()), se = static_cast<double>(acc.mean_se());
    if (cfg.p == 0.5)
      ctx.check("crossing_half_n" + std::to_string(n), within(est, se, 0.5, 4.0),
                "estimate " + fmt(est) + " se " + fmt(se), se > 0 ? (est - 0.5) / se : 0.0, 4.0);
  }
}

Series load_inputs(const ExperimentConfig& cfg) {
  if (cfg.inputs.empty()) throw Error(ErrorCode::usage, cfg.command + " needs at least one --input");
  Series acc;
  for (const auto& path : cfg.inputs) acc = merge(acc, parse_csv(read_text_file(path)));
  return acc;
}

json fit_json(const ExponentEstimate& e) {
  json j = {{"observable", e.label}, {"slope", e.slope}, {"slope_se", e.slope_se}, {"intercept", e.intercept},
            {"chi2_per_dof", e.chi2_per_dof}, {"weighted", e.weighted}, {"scales", e.scales}, {"note", e.note}};
  j["finite_size_shift"] = e.finite_size_shift ? json(*e.finite_size_shift) : json(nullptr);
  if (e.correction) j["log_correction"] = *e.correction;
  return j;
}

json verdict_json(const Verdict& v) {
  return {{"exponent", v.exponent}, {"target_rational", v.target_rational}, {"target_decimal", v.target},
          {"deviation", v.deviation}, {"allowed", v.allowed}, {"consistent", v.consistent}};
}

ScalingSeries series_for(const Series& s, const std::string& observable) {
  ScalingSeries out;
  out.label = observable;
  for (const auto& r : s.rows)
    if (r.observable == observable) out.points.push_back({r.n, r.estimate, r.se, r.samples});
  std::sort(out.points.begin(), out.points.end(), [](const ScalingPoint& a, const ScalingPoint& b) { return a.n < b.n; });
  return out;
}

void run_fit(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const Series in = load_inputs(cfg);
  if (cfg.observable.empty()) throw Error(ErrorCode::usage, "fit needs --observable");
  const ScalingSeries s = series_for(in, cfg.observable);
  if (s.points.empty()) throw Error(ErrorCode::usage, "no rows for observable " + cfg.observable);
  const ExponentEstimate e = fit_exponent(s, FitOptions{cfg.log_correction});
  json f = fit_json(e);
  if (!cfg.target.empty()) {
    const Verdict v = compare_targets(e, TargetSpec{parse_rational(cfg.target), cfg.decay ? -1 : 1, cfg.tolerance});
    f["verdict"] = verdict_json(v);
  }
  ctx.fits.push_back(f);
  std::ostringstream out;
  out << "# perclab schema=" << kSchemaVersion << " command=fit config_hash=" << in.config_hash
      << " observable=" << cfg.observable << "\n";
  out << "n,samples,estimate,stderr,fitted,residual\n";
  for (const auto& p : s.points) {
    const double fitted = e.fitted(p.n);
    out << p.n << ',' << p.samples << ',' << format_double(p.estimate) << ',' << format_double(p.se) << ','
        << format_double(fitted) << ',' << format_double(std::log(p.estimate) - std::log(fitted)) << "\n";
  }
  ctx.csv_override = out.str();
  ctx.series.command = in.command;
  ctx.series.config_hash = in.config_hash;
}

void run_merge(Context& ctx) {
  ctx.series = load_inputs(ctx.cfg);
}

void auto_fits(Context& ctx) {
  for (const TargetInfo& t : targets_for(ctx.cfg.command)) {
    const ScalingSeries s = series_for(ctx.series, t.observable);
    if (s.points.size() < 3) continue;
    try {
      const ExponentEstimate e = fit_exponent(s);
      json f = fit_json(e);
      f["verdict"] = verdict_json(compare_targets(e, TargetSpec{t.rational, t.sign, ctx.cfg.tolerance}));
      ctx.fits.push_back(f);
    } catch (const Error& err) {
      ctx.fits.push_back({{"observable", t.observable}, {"error", err.what()}});
    }
  }
}

json config_echo(const ExperimentConfig& cfg) {
  return {{"command", cfg.command}, {"n_grid", cfg.n_grid}, {"m", cfg.m_rule}, {"m_inner", cfg.m_inner},
          {"replicas", cfg.replicas}, {"replica_offset", cfg.replica_offset}, {"seed", cfg.seed},
          {"workers", cfg.workers}, {"epsilon", cfg.epsilon}, {"p", cfg.p}, {"max_attempts", cfg.max_attempts},
          {"min_events", cfg.min_events}, {"max_replicas", cfg.max_replicas}, {"mc_inner", cfg.mc_inner},
          {"direct_replicas", cfg.direct_replicas}, {"csv", cfg.csv_path}, {"json", cfg.json_path},
          {"format", cfg.format}, {"golden", cfg.golden_path}, {"inputs", cfg.inputs},
          {"observable", cfg.observable}, {"target", cfg.target}, {"decay", cfg.decay},
          {"correction", cfg.log_correction}, {"tolerance", cfg.tolerance}};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = cfg.command;
  j["config"] = config_echo(cfg);
  j["config_hash"] = config_hash(cfg);
  json targets = json::object();
  for (const TargetInfo& t : targets_for(cfg.command))
    targets[t.observable] = {{"rational", t.rational.str()}, {"decimal", t.rational.value()},
                             {"sign", t.sign > 0 ? "growth" : "decay"}};
  j["targets"] = targets;
  Context ctx{cfg, {}, json::array(), json::array(), json::object(), true, ""};
  try {
    if (cfg.command.empty()) throw Error(ErrorCode::usage, "no command given");
    if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw Error(ErrorCode::usage, "p must lie in [0, 1]");
    if (!(cfg.epsilon > 0.0)) throw Error(ErrorCode::usage, "epsilon must be positive");
    ctx.series.command = cfg.command;
    ctx.series.config_hash = config_hash(cfg);
    static const std::map<std::string, std::function<void(Context&)>> dispatch = {
        {"oracle", run_oracle}, {"incipient", run_incipient}, {"sn", run_sn},
        {"arms", run_arms},     {"pivotal", run_pivotal},     {"bubble", run_bubble},
        {"crossing", run_crossing}, {"fit", run_fit},        {"merge", run_merge}};
    dispatch.at(cfg.command)(ctx);
    ctx.series.sort_rows();
    auto_fits(ctx);
    res.csv = ctx.csv_override.empty() ? write_csv(ctx.series) : ctx.csv_override;
    res.exit_code = ctx.checks_ok ? 0 : 2;
    j["status"] = ctx.checks_ok ? "ok" : "check_failed";
  } catch (const Error& e) {
    res.exit_code = exit_status(e.code());
    res.error = e.what();
    j["status"] = "error";
    j["error"] = {{"code", error_code_name(e.code())}, {"message", e.what()}};
  } catch (const std::exception& e) {
    res.exit_code = 2;
    res.error = e.what();
    j["status"] = "error";
    j["error"] = {{"code", "internal"}, {"message", e.what()}};
  }
  json rows = json::array();
  for (const auto& r : ctx.series.rows)
    rows.push_back({{"observable", r.observable}, {"n", r.n}, {"m", r.m}, {"samples", r.samples},
                    {"estimate", r.estimate}, {"stderr", r.se}, {"attempts", r.attempts}});
  j["rows"] = rows;
  j["fits"] = ctx.fits;
  j["checks"] = ctx.checks;
  if (!ctx.extra.empty()) j["details"] = ctx.extra;
  j["exit_code"] = res.exit_code;
  j["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.json = j.dump(2) + "\n";
  try {
    if (!cfg.csv_path.empty() && !res.csv.empty()) write_text_file(cfg.csv_path, res.csv);
    if (!cfg.json_path.empty()) write_text_file(cfg.json_path, res.json);
  } catch (const Error& e) {
    if (res.exit_code == 0) res.exit_code = exit_status(e.code());
    res.error = e.what();
  }
  return res;
}

}  // namespace perc
