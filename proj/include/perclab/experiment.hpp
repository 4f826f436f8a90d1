#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perclab/error.hpp"

namespace perc {

struct ExperimentConfig {
  std::string command;
  std::vector<int> n_grid{8, 16, 32, 64, 128};
  std::string m_rule = "2n";  // "2n", "n" or a fixed integer
  int m_inner = 1;            // inner radius of arm annuli
  std::uint64_t replicas = 1000;
  std::uint64_t replica_offset = 0;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double epsilon = 0.2;
  double p = 0.5;
  std::uint64_t max_attempts = 1000000;
  std::uint64_t min_events = 0;    // arms: keep adding batches until Q_2_2 has this many events
  std::uint64_t max_replicas = 0;  // arms: cap for the adaptive budget
  std::uint64_t mc_inner = 0;      // bubble: accepted resamples per atom; 0 skips the estimate
  std::uint64_t direct_replicas = 0;  // bubble: direct variance replicas (0: 10 x replicas)
  std::string csv_path;
  std::string json_path;
  std::string format = "csv";
  std::string golden_path;
  std::vector<std::string> inputs;
  std::string observable;
  std::string target;
  bool decay = false;
  bool log_correction = false;
  double tolerance = 0.1;
};

// Keys mirror the long CLI flags with '-' written as '_'.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void load_config_file(ExperimentConfig& cfg, const std::string& path);
void load_config_text(ExperimentConfig& cfg, const std::string& text);
// PERCLAB_SEED overrides the master seed.
void apply_environment(ExperimentConfig& cfg);

int conditioning_scale(const ExperimentConfig& cfg, int n);

// Everything that determines the per-replica values; replica range, worker
// count and output settings are left out so partial runs can be merged.
std::string canonical_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

std::uint64_t scale_seed(const ExperimentConfig& cfg, int n, int m);

struct RunResult {
  int exit_code = 0;
  std::string csv;
  std::string json;
  std::string error;
};

// Runs a command and writes the configured output files.
RunResult run_experiment(const ExperimentConfig& cfg);

}  // namespace perc
