#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "antijam/agent.hpp"
#include "antijam/config.hpp"
#include "antijam/env.hpp"
#include "antijam/run_log.hpp"

namespace antijam {

/// Mean of the last min(size, window) returns.
double rolling_average(std::span<const double> returns, std::size_t window);

using ProgressSink = std::function<void(const EpisodeRecord&)>;
using StepSink = std::function<void(std::size_t episode, std::size_t action, const env::StepOutcome&)>;

struct TrainOptions {
  /// Called on the training thread after each episode, once the record is persisted.
  ProgressSink progress;
  /// Optional step-level trace.
  StepSink step_trace;
  /// Polled at episode boundaries; true ends the run with status=stopped.
  std::function<bool()> stop_requested;
  std::string run_id;
};

/// Episode loop: act -> env.step -> remember -> learn on every step.
class Trainer {
 public:
  explicit Trainer(TrainConfig config, TrainOptions options = {});

  RunLog run();

  const agent::DdqnAgent& agent() const { return agent_; }
  const TrainConfig& config() const { return config_; }

 private:
  TrainConfig config_;
  TrainOptions options_;
  Rng master_;
  env::Environment env_;
  agent::DdqnAgent agent_;
};

RunLog train(const TrainConfig& config, TrainOptions options = {});

/// Deterministic id for reproducible runs, time-based otherwise.
std::string make_run_id(const TrainConfig& config);

struct EvalStats {
  double mean_return = 0.0;
  double std_return = 0.0;
  /// Fraction of steps transmitted on the jammed channel.
  double jam_rate = 0.0;
  /// Fraction of steps that changed channel.
  double switch_rate = 0.0;
};

/// Greedy rollouts with learning disabled.
EvalStats evaluate(const nn::Mlp& q_network, const env::EnvConfig& env_config,
                   const env::JammerModel& jammer, std::size_t episodes);
EvalStats evaluate(const agent::AgentCheckpoint& checkpoint, const env::EnvConfig& env_config,
                   const env::JammerModel& jammer, std::size_t episodes);

}  // namespace antijam
