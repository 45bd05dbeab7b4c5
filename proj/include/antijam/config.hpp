#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "antijam/agent.hpp"
#include "antijam/env.hpp"
#include "antijam/error.hpp"
#include "antijam/keyvalue.hpp"

namespace antijam {

struct TrainConfig {
  std::size_t episodes = 200;
  env::EnvConfig env;
  env::JammerModel jammer = env::JammerModel::sweep(0, 1, 1);
  agent::AgentConfig agent;
  double solved_threshold = 90.0;
  std::size_t rolling_window = 10;
  std::uint64_t seed = 0;
  /// Periodic checkpoint interval in episodes; 0 writes only the final checkpoint.
  std::size_t checkpoint_every = 50;
  /// Run directory for run.log and checkpoint.txt; empty keeps everything in memory.
  std::string output_dir;
  bool stop_on_solve = true;
  /// Zero wall-clock fields and the creation timestamp so equal configs give
  /// byte-identical files.
  bool reproducible = false;

  /// Epsilon horizon after resolving the 0 = "whole run" default.
  std::size_t effective_epsilon_horizon() const;
};

/// All invariant violations, with fields named by their config keys.
std::vector<FieldError> check(const TrainConfig& config);
void validate(const TrainConfig& config);

/// Canonical flat key=value schema shared by config files, run-log headers,
/// the service API and the CLI.
KeyValues to_key_values(const TrainConfig& config);
/// Rejects unknown keys. Throws ConfigError naming the offending key.
TrainConfig train_config_from(KeyValues kv);
TrainConfig load_train_config(const std::filesystem::path& path);

}  // namespace antijam
