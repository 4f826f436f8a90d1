#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "perclab/error.hpp"
#include "perclab/experiment.hpp"
#include "perclab/series.hpp"

using namespace perc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("perclab_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig quick(const std::string& command) {
  ExperimentConfig c;
  c.command = command;
  c.n_grid = {2, 4};
  c.replicas = 200;
  return c;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config parsing") {
    ExperimentConfig c;
    load_config_text(c,
                     "# comment\n"
                     "command = incipient\n"
                     "n_grid = 4, 8,16\n"
                     "m = n\n"
                     "samples = 500  # trailing\n"
                     "seed = 77\n"
                     "workers = 2\n");
    CHECK(c.command == "incipient");
    CHECK(c.n_grid == std::vector<int>{4, 8, 16});
    CHECK(conditioning_scale(c, 8) == 8);
    CHECK(c.replicas == 500);
    CHECK(c.seed == 77);
    CHECK(c.workers == 2);
    set_config_value(c, "m", "2n");
    CHECK(conditioning_scale(c, 8) == 16);
    set_config_value(c, "m", "40");
    CHECK(conditioning_scale(c, 8) == 40);
    set_config_value(c, "n-grid", "3");
    CHECK(c.n_grid == std::vector<int>{3});
    CHECK_THROWS_AS(set_config_value(c, "bogus", "1"), Error);
    CHECK_THROWS_AS(set_config_value(c, "replicas", "-4"), Error);
    CHECK_THROWS_AS(set_config_value(c, "command", "dance"), Error);
    CHECK_THROWS_AS(set_config_value(c, "format", "xml"), Error);
    CHECK_THROWS_AS(load_config_text(c, "no equals sign\n"), Error);
  }

  TEST_CASE("hash ignores bookkeeping keys") {
    ExperimentConfig a = quick("incipient"), b = a;
    b.replicas = 999;
    b.replica_offset = 5;
    b.workers = 4;
    b.csv_path = "x.csv";
    b.format = "json";
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
  }

  TEST_CASE("environment seed") {
    ExperimentConfig c;
    c.seed = 5;
    ::setenv("PERCLAB_SEED", "1234", 1);
    apply_environment(c);
    CHECK(c.seed == 1234);
    ::setenv("PERCLAB_SEED", "nope", 1);
    CHECK_THROWS_AS(apply_environment(c), Error);
    ::unsetenv("PERCLAB_SEED");
    apply_environment(c);
    CHECK(c.seed == 1234);
  }

  TEST_CASE("runs are reproducible and worker independent") {
    for (const char* cmd : {"incipient", "sn", "arms", "crossing", "pivotal"}) {
      CAPTURE(cmd);
      ExperimentConfig a = quick(cmd);
      if (std::string(cmd) == "arms") a.m_inner = 1;
      ExperimentConfig b = a;
      b.workers = 3;
      const RunResult ra = run_experiment(a), ra2 = run_experiment(a), rb = run_experiment(b);
      CHECK(ra.exit_code == 0);
      CHECK(ra.error.empty());
      CHECK(ra.csv == ra2.csv);
      CHECK(ra.csv == rb.csv);
      const auto j = nlohmann::json::parse(ra.json);
      CHECK(j["schema_version"] == 1);
      CHECK(j["config"]["command"] == cmd);
      CHECK(j.contains("wall_clock_seconds"));
    }
  }

  TEST_CASE("two halves merge into the full run") {
    ExperimentConfig full = quick("incipient");
    full.replicas = 400;
    ExperimentConfig h1 = full, h2 = full;
    h1.replicas = 200;
    h2.replicas = 200;
    h2.replica_offset = 200;
    const Series merged = merge(parse_csv(run_experiment(h1).csv), parse_csv(run_experiment(h2).csv));
    CHECK(write_csv(merged) == run_experiment(full).csv);
  }

  TEST_CASE("json targets carry rationals") {
    const RunResult r = run_experiment(quick("incipient"));
    const auto j = nlohmann::json::parse(r.json);
    CHECK(j["targets"]["T_mean"]["rational"] == "91/48");
    CHECK(j["targets"]["T_var"]["rational"] == "91/24");
    const RunResult a = run_experiment(quick("arms"));
    const auto ja = nlohmann::json::parse(a.json);
    CHECK(ja["targets"]["Q_1_0"]["rational"] == "5/48");
    CHECK(ja["targets"]["Q_2_2"]["rational"] == "5/4");
  }

  TEST_CASE("oracle golden file and incipient comparison") {
    const fs::path dir = scratch_dir("golden");
    ExperimentConfig o;
    o.command = "oracle";
    o.golden_path = (dir / "golden.json").string();
    const RunResult ro = run_experiment(o);
    CHECK(ro.exit_code == 0);
    REQUIRE(fs::exists(o.golden_path));
    ExperimentConfig i;
    i.command = "incipient";
    i.n_grid = {1};
    i.m_rule = "1";
    i.replicas = 20000;
    i.golden_path = o.golden_path;
    const RunResult ri = run_experiment(i);
    const auto j = nlohmann::json::parse(ri.json);
    int golden_checks = 0;
    for (const auto& c : j["checks"]) {
      CAPTURE(c.dump());
      CHECK(c["ok"] == true);
      golden_checks += c["name"].get<std::string>().rfind("golden_", 0) == 0;
    }
    CHECK(golden_checks >= 11);
    CHECK(ri.exit_code == 0);
  }

  TEST_CASE("errors map to exit codes") {
    ExperimentConfig bad;
    CHECK(run_experiment(bad).exit_code == 1);
    ExperimentConfig starved = quick("incipient");
    starved.p = 0.0;
    starved.max_attempts = 10;
    const RunResult r = run_experiment(starved);
    CHECK(r.exit_code == 3);
    const auto j = nlohmann::json::parse(r.json);
    CHECK(j["status"] == "error");
    CHECK(j["error"]["code"] == "budget_exceeded");
    ExperimentConfig o;
    o.command = "oracle";
    o.p = 0.4;
    CHECK(run_experiment(o).exit_code == 1);
    ExperimentConfig f;
    f.command = "fit";
    CHECK(run_experiment(f).exit_code == 1);
  }

  TEST_CASE("fit on a written series") {
    const fs::path dir = scratch_dir("fit");
    Series s;
    s.command = "synthetic";
    s.config_hash = "0000000000000000";
    for (int n : {4, 8, 16, 32}) {
      SeriesRow r;
      r.n = n;
      r.m = n;
      r.observable = "y_mean";
      for (int k = 0; k < 10; ++k) r.sums.add(static_cast<std::int64_t>(n) * n);
      r.finalize();
      s.rows.push_back(r);
    }
    write_text_file((dir / "s.csv").string(), write_csv(s));
    ExperimentConfig f;
    f.command = "fit";
    f.inputs = {(dir / "s.csv").string()};
    f.observable = "y_mean";
    f.target = "2";
    const RunResult r = run_experiment(f);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.json);
    CHECK(j["fits"][0]["slope"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(j["fits"][0]["verdict"]["consistent"] == true);
    CHECK(r.csv.find("n,samples,estimate,stderr,fitted,residual") != std::string::npos);
  }
}
