#include "perclab/perclab.h"

#include <cstring>
#include <string>

#include "perclab/arms.hpp"
#include "perclab/clusters.hpp"
#include "perclab/experiment.hpp"
#include "perclab/martingale.hpp"
#include "perclab/scaling.hpp"
#include "perclab/series.hpp"

struct perc_experiment {
  perc::ExperimentConfig cfg;
};

struct perc_result {
  perc::RunResult r;
};

struct perc_config {
  perc::Configuration c;
};

namespace {

thread_local std::string g_last_error;

perc_status from_code(perc::ErrorCode c) {
  switch (c) {
    case perc::ErrorCode::usage: return PERC_ERR_USAGE;
    case perc::ErrorCode::invariant: return PERC_ERR_INVARIANT;
    case perc::ErrorCode::budget_exceeded: return PERC_ERR_BUDGET;
    case perc::ErrorCode::io: return PERC_ERR_IO;
    case perc::ErrorCode::config_mismatch: return PERC_ERR_CONFIG_MISMATCH;
    case perc::ErrorCode::region_too_large: return PERC_ERR_REGION_TOO_LARGE;
    case perc::ErrorCode::nonpositive_estimate: return PERC_ERR_NONPOSITIVE;
    case perc::ErrorCode::cluster_touches_boundary: return PERC_ERR_TOUCHES_BOUNDARY;
  }
  return PERC_ERR_INTERNAL;
}

template <class F>
perc_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PERC_OK;
  } catch (const perc::Error& e) {
    g_last_error = e.what();
    return from_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PERC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return PERC_ERR_INTERNAL;
  }
}

perc_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return PERC_ERR_NULL;
}

perc::Edge make_edge(int x, int y, int orientation) {
  if (orientation != 0 && orientation != 1) throw perc::Error(perc::ErrorCode::usage, "orientation must be 0 or 1");
  return perc::Edge{{x, y}, orientation ? perc::Orientation::vertical : perc::Orientation::horizontal};
}

std::size_t checked_index(const perc::Configuration& c, const perc::Edge& e) {
  const auto& b = c.region();
  if (!b.contains(e.lo) || !b.contains(e.hi())) throw perc::Error(perc::ErrorCode::usage, "edge outside the box");
  return b.edge_index(e);
}

}  // namespace

extern "C" {

const char* perc_version(void) { return "1.0.0"; }
const char* perc_last_error(void) { return g_last_error.c_str(); }

const char* perc_status_name(perc_status s) {
  switch (s) {
    case PERC_OK: return "ok";
    case PERC_ERR_USAGE: return "usage";
    case PERC_ERR_INVARIANT: return "invariant";
    case PERC_ERR_BUDGET: return "budget_exceeded";
    case PERC_ERR_IO: return "io";
    case PERC_ERR_CONFIG_MISMATCH: return "config_mismatch";
    case PERC_ERR_REGION_TOO_LARGE: return "region_too_large";
    case PERC_ERR_NONPOSITIVE: return "nonpositive_estimate";
    case PERC_ERR_TOUCHES_BOUNDARY: return "cluster_touches_boundary";
    case PERC_ERR_NULL: return "null_argument";
    case PERC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

perc_status perc_experiment_create(perc_experiment** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = new perc_experiment{}; });
}

void perc_experiment_destroy(perc_experiment* e) { delete e; }

perc_status perc_experiment_set(perc_experiment* e, const char* key, const char* value) {
  if (!e || !key || !value) return null_arg("experiment/key/value");
  return guarded([&] { perc::set_config_value(e->cfg, key, value); });
}

perc_status perc_experiment_load_file(perc_experiment* e, const char* path) {
  if (!e || !path) return null_arg("experiment/path");
  return guarded([&] { perc::load_config_file(e->cfg, path); });
}

perc_status perc_experiment_apply_environment(perc_experiment* e) {
  if (!e) return null_arg("experiment");
  return guarded([&] { perc::apply_environment(e->cfg); });
}

perc_status perc_experiment_hash(const perc_experiment* e, char* buf, size_t len) {
  if (!e || !buf) return null_arg("experiment/buf");
  return guarded([&] {
    const std::string h = perc::config_hash(e->cfg);
    if (len < h.size() + 1) throw perc::Error(perc::ErrorCode::usage, "buffer too small");
    std::memcpy(buf, h.c_str(), h.size() + 1);
  });
}

perc_status perc_experiment_run(const perc_experiment* e, perc_result** out) {
  if (!e || !out) return null_arg("experiment/out");
  return guarded([&] { *out = new perc_result{perc::run_experiment(e->cfg)}; });
}

const char* perc_result_csv(const perc_result* r) { return r ? r->r.csv.c_str() : ""; }
const char* perc_result_json(const perc_result* r) { return r ? r->r.json.c_str() : ""; }
const char* perc_result_error(const perc_result* r) { return r ? r->r.error.c_str() : ""; }
int perc_result_exit_code(const perc_result* r) { return r ? r->r.exit_code : 1; }
void perc_result_destroy(perc_result* r) { delete r; }

perc_status perc_merge_files(const char* const* paths, size_t count, const char* out_path) {
  if (!paths && count) return null_arg("paths");
  return guarded([&] {
    perc::Series acc;
    for (size_t i = 0; i < count; ++i) {
      if (!paths[i]) throw perc::Error(perc::ErrorCode::usage, "null path");
      acc = perc::merge(acc, perc::parse_csv(perc::read_text_file(paths[i])));
    }
    acc.sort_rows();
    if (out_path) perc::write_text_file(out_path, perc::write_csv(acc));
  });
}

perc_status perc_config_create(int radius, perc_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    if (radius < 0 || radius > perc::kMaxSampleRadius) throw perc::Error(perc::ErrorCode::usage, "bad radius");
    *out = new perc_config{perc::Configuration(perc::BoxRegion(radius))};
  });
}

perc_status perc_config_sample(int radius, double p, uint64_t seed, uint64_t replica, perc_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    if (radius < 0 || radius > perc::kMaxSampleRadius) throw perc::Error(perc::ErrorCode::usage, "bad radius");
    *out = new perc_config{perc::sample_configuration(perc::BoxRegion(radius), p, seed, replica)};
  });
}

void perc_config_destroy(perc_config* c) { delete c; }

perc_status perc_config_edge_count(const perc_config* c, size_t* out) {
  if (!c || !out) return null_arg("config/out");
  return guarded([&] { *out = c->c.region().edge_count(); });
}

perc_status perc_config_set_edge(perc_config* c, int x, int y, int orientation, int open) {
  if (!c) return null_arg("config");
  return guarded([&] { c->c.set_open(checked_index(c->c, make_edge(x, y, orientation)), open != 0); });
}

perc_status perc_config_get_edge(const perc_config* c, int x, int y, int orientation, int* open) {
  if (!c || !open) return null_arg("config/open");
  return guarded([&] { *open = c->c.is_open(checked_index(c->c, make_edge(x, y, orientation))) ? 1 : 0; });
}

perc_status perc_observable_t(const perc_config* c, int n, int m, int64_t* value, int* defined) {
  if (!c || !value || !defined) return null_arg("config/value/defined");
  return guarded([&] {
    if (n < 0 || m < n || m > c->c.region().radius())
      throw perc::Error(perc::ErrorCode::usage, "need 0 <= n <= m <= box radius");
    const perc::Configuration inner = c->c.restricted(m);
    const auto s = perc::observable_T(inner, n);
    *defined = s ? 1 : 0;
    *value = s ? s->value : 0;
  });
}

perc_status perc_observable_s(const perc_config* c, int n, int64_t* value) {
  if (!c || !value) return null_arg("config/value");
  return guarded([&] { *value = perc::observable_S(c->c, n).value; });
}

perc_status perc_arm_event(const perc_config* c, int m, int n, int open_arms, int closed_arms, int* holds,
                           int* open_count, int* closed_count) {
  if (!c || !holds) return null_arg("config/holds");
  return guarded([&] {
    perc::ArmQuery q;
    q.inner = m;
    q.outer = n;
    q.open_arms = open_arms;
    q.closed_arms = closed_arms;
    const perc::ArmResult r = perc::arm_event(c->c, q);
    *holds = r.event_holds ? 1 : 0;
    if (open_count) *open_count = r.max_open_disjoint;
    if (closed_count) *closed_count = r.max_closed_disjoint;
  });
}

perc_status perc_bubble_summary(const perc_config* c, size_t* sets, size_t* nonsingle) {
  if (!c || !sets || !nonsingle) return null_arg("config/sets/nonsingle");
  return guarded([&] {
    const perc::BubbleDecomposition d = perc::bubble_decomposition(c->c);
    *sets = d.sets.size();
    *nonsingle = d.nonsingle();
  });
}

perc_status perc_fit_exponent(const int* n, const double* estimate, const double* stderr_, size_t count,
                              double* slope, double* slope_se) {
  if (!n || !estimate || !slope) return null_arg("n/estimate/slope");
  return guarded([&] {
    perc::ScalingSeries s;
    s.label = "fit";
    for (size_t i = 0; i < count; ++i) s.points.push_back({n[i], estimate[i], stderr_ ? stderr_[i] : 0.0, 0});
    const perc::ExponentEstimate e = perc::fit_exponent(s);
    *slope = e.slope;
    if (slope_se) *slope_se = e.slope_se;
  });
}

}  // extern "C"
