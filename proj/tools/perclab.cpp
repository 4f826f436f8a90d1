// perclab command line; talks to the library only through perclab.h
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perclab/perclab.h"

namespace {

struct Flag {
  const char* name;  // long flag, also the config key
  const char* help;
};

const std::vector<Flag> kFlags = {
    {"n", "single scale (same as --n-grid with one entry)"},
    {"n-grid", "comma separated scales"},
    {"m", "conditioning scale: 2n, n or an integer"},
    {"m-inner", "inner radius of the arm annulus"},
    {"replicas", "replicas per scale"},
    {"samples", "alias of --replicas"},
    {"replica-offset", "first replica index"},
    {"seed", "master seed (overrides PERCLAB_SEED)"},
    {"workers", "worker threads"},
    {"epsilon", "epsilon for H_eps and the S_n tail"},
    {"p", "edge probability"},
    {"max-attempts", "rejection budget per replica"},
    {"min-events", "arms: keep sampling until this many (2,2) events"},
    {"max-replicas", "arms: ceiling for the adaptive budget"},
    {"mc-inner", "bubble: conditional draws per outer sample"},
    {"direct-replicas", "bubble: replicas for the direct variance"},
    {"csv", "CSV output path"},
    {"json", "JSON summary path"},
    {"format", "stdout format: csv or json"},
    {"golden", "golden file (written by oracle, read by incipient)"},
    {"observable", "fit: observable to regress"},
    {"target", "fit: target exponent as a rational"},
    {"decay", "fit: target is a decay exponent (true/false)"},
    {"correction", "fit: add a 1/log n correction (true/false)"},
    {"tolerance", "fit: absolute tolerance on the slope"},
};

const std::vector<std::pair<const char*, const char*>> kCommands = {
    {"oracle", "exact n=1 enumeration, identities and golden file"},
    {"incipient", "T_n moments under the incipient measure"},
    {"sn", "S_n moments and lower tail"},
    {"arms", "arm event frequencies"},
    {"pivotal", "H_eps frequencies and open/closed symmetry"},
    {"bubble", "bubble decomposition and martingale checks"},
    {"crossing", "rectangle crossing self-duality"},
    {"fit", "exponent regression on a series"},
    {"merge", "combine partial runs"},
};

void fail(const char* what, perc_status s) {
  std::fprintf(stderr, "{\"status\":\"error\",\"code\":\"%s\",\"message\":\"%s: %s\"}\n", perc_status_name(s), what,
               perc_last_error());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"critical percolation experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::string> inputs;

  for (const auto& [name, help] : kCommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key=value config file");
    for (const Flag& f : kFlags) sub->add_option(std::string("--") + f.name, values[f.name], f.help);
    sub->add_option("--input,-i", inputs, "input CSV (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  CLI::App* sub = app.get_subcommands().front();

  perc_experiment* exp = nullptr;
  perc_status s = perc_experiment_create(&exp);
  if (s != PERC_OK) {
    fail("create", s);
    return 2;
  }
  auto finish = [&](int rc) {
    perc_experiment_destroy(exp);
    return rc;
  };
  if (!config_path.empty() && (s = perc_experiment_load_file(exp, config_path.c_str())) != PERC_OK) {
    fail("config", s);
    return finish(1);
  }
  if ((s = perc_experiment_apply_environment(exp)) != PERC_OK) {
    fail("environment", s);
    return finish(1);
  }
  if ((s = perc_experiment_set(exp, "command", command.c_str())) != PERC_OK) {
    fail("command", s);
    return finish(1);
  }
  for (const Flag& f : kFlags) {
    if (sub->count(std::string("--") + f.name) == 0) continue;
    if ((s = perc_experiment_set(exp, f.name, values[f.name].c_str())) != PERC_OK) {
      fail(f.name, s);
      return finish(1);
    }
  }
  for (const auto& in : inputs) {
    if ((s = perc_experiment_set(exp, "input", in.c_str())) != PERC_OK) {
      fail("input", s);
      return finish(1);
    }
  }

  perc_result* res = nullptr;
  if ((s = perc_experiment_run(exp, &res)) != PERC_OK) {
    fail("run", s);
    return finish(2);
  }
  const int rc = perc_result_exit_code(res);
  const bool want_json = sub->count("--format") && values["format"] == "json";
  const bool csv_to_file = sub->count("--csv") > 0;
  const bool json_to_file = sub->count("--json") > 0;
  if (want_json) {
    if (!json_to_file) std::cout << perc_result_json(res);
  } else if (!csv_to_file) {
    std::cout << perc_result_csv(res);
  }
  if (rc != 0) {
    // the JSON summary carries the machine-readable error record
    if (want_json && !json_to_file) {
      std::cerr << perc_result_error(res) << "\n";
    } else {
      std::cerr << perc_result_json(res);
    }
  }
  perc_result_destroy(res);
  return finish(rc);
}
