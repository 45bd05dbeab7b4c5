#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "antijam/error.hpp"
#include "antijam/keyvalue.hpp"
#include "antijam/random.hpp"

namespace antijam::env {

enum class UtilityMode { binary, sinr };

std::string to_string(UtilityMode mode);
UtilityMode utility_mode_from_string(const std::string& key, const std::string& text);

struct EnvConfig {
  std::size_t num_channels = 10;
  std::size_t steps_per_episode = 100;
  /// Reward penalty for changing channel between consecutive steps.
  double switching_cost = 0.1;
  double jammer_power = 1.0;
  /// Upper bound of the additive uniform noise on every channel.
  double noise_floor = 0.01;
  /// Fraction of jammer power seen on each directly adjacent channel.
  double adjacent_leakage = 0.0;
  UtilityMode utility_mode = UtilityMode::binary;
  /// Transmit signal power for the sinr utility.
  double signal_power = 1.0;
  std::uint64_t rng_seed = 0;

  /// Per-step utility of an unjammed clean channel; both modes are normalized to 1.
  static constexpr double kMaxUtility = 1.0;

  std::vector<FieldError> check() const;
  /// Throws ConfigError for the first violated invariant.
  void validate() const;
};

enum class JammerKind { fixed, sweep, random_uniform, markov };

std::string to_string(JammerKind kind);

/// Oblivious jammer: its channel sequence never depends on the agent's actions.
class JammerModel {
 public:
  static JammerModel fixed(std::size_t channel);
  static JammerModel sweep(std::size_t start, std::size_t stride = 1, int direction = 1);
  static JammerModel random_uniform();
  static JammerModel markov(double stay_probability);
  /// Every parameter explicit; used when reading the config schema.
  static JammerModel from_parts(JammerKind kind, std::size_t channel, std::size_t stride,
                                int direction, double stay_probability);

  JammerKind kind() const noexcept { return kind_; }
  std::size_t fixed_channel() const noexcept { return anchor_; }
  std::size_t sweep_start() const noexcept { return anchor_; }
  std::size_t stride() const noexcept { return stride_; }
  int direction() const noexcept { return direction_; }
  double stay_probability() const noexcept { return stay_probability_; }

  /// Current jammed channel f_J.
  std::size_t channel() const noexcept { return channel_; }

  std::vector<FieldError> check(std::size_t num_channels) const;
  void validate(std::size_t num_channels) const;

  void reset(Rng& rng, std::size_t num_channels);
  void advance(Rng& rng, std::size_t num_channels);

  bool operator==(const JammerModel&) const = default;

 private:
  JammerModel(JammerKind kind) : kind_(kind) {}

  JammerKind kind_;
  std::size_t anchor_ = 0;
  std::size_t stride_ = 1;
  int direction_ = 1;
  double stay_probability_ = 0.9;
  std::size_t channel_ = 0;
};

struct ObservationVector {
  /// Received power per channel, linear units.
  std::vector<double> powers;
  /// powers / (jammer_power + noise_floor); every entry in [0, 1].
  std::vector<double> normalized;
};

struct StepInfo {
  bool jammed = false;
  bool switched = false;
  std::size_t jammer_channel = 0;
};

struct StepOutcome {
  ObservationVector observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Deterministic interference on `channel` while the jammer sits on `jammer_channel`.
double interference(std::size_t channel, std::size_t jammer_channel, const EnvConfig& config);

/// U(f_T): 1 in binary mode; normalized log2(1 + SINR) in sinr mode.
double utility(std::size_t transmit_channel, std::size_t jammer_channel, const EnvConfig& config);

/// 0 when the transmitter and jammer share a channel, otherwise
/// U(f_T) - switching_cost * [action != previous]. No switching cost without a previous action.
double compute_reward(std::size_t transmit_channel, std::size_t jammer_channel, std::size_t action,
                      std::optional<std::size_t> previous_action, const EnvConfig& config);

/// Jammer power on f_J, leakage on the linear neighbours, plus uniform noise in
/// [0, noise_floor] drawn from `noise` (no noise when null).
ObservationVector received_powers(std::size_t jammer_channel, const EnvConfig& config, Rng* noise);

class Environment {
 public:
  Environment(EnvConfig config, JammerModel jammer);

  /// Starts an episode: step counter 0, jammer at its initial channel, no previous action.
  ObservationVector reset();
  StepOutcome step(std::size_t action);

  const EnvConfig& config() const noexcept { return config_; }
  const JammerModel& jammer() const noexcept { return jammer_; }
  std::size_t steps_taken() const noexcept { return step_; }
  bool done() const noexcept { return step_ >= config_.steps_per_episode; }

 private:
  EnvConfig config_;
  JammerModel jammer_;
  Rng rng_;
  std::size_t step_ = 0;
  bool started_ = false;
  std::optional<std::size_t> previous_action_;
};

// Config file schema, keys prefixed as given (e.g. "env.").
KeyValues to_key_values(const EnvConfig& config, const std::string& prefix);
EnvConfig env_config_from(KeyValues& kv, const std::string& prefix);
KeyValues to_key_values(const JammerModel& jammer, const std::string& prefix);
JammerModel jammer_from(KeyValues& kv, const std::string& prefix);

}  // namespace antijam::env
