#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "antijam/error.hpp"
#include "antijam/keyvalue.hpp"
#include "antijam/nn.hpp"
#include "antijam/random.hpp"

namespace antijam::agent {

enum class EpsilonDecay { linear_per_episode, exponential_per_step };

std::string to_string(EpsilonDecay decay);

/// Exploration rate as a function of the exploration clock (episode index for
/// linear decay, global step for exponential decay).
struct EpsilonSchedule {
  double start = 0.93;
  double end = 0.08;
  EpsilonDecay decay = EpsilonDecay::linear_per_episode;
  /// 0 lets the trainer stretch the decay over the whole run.
  std::size_t horizon = 0;

  /// value(0) = start; linear decay reaches `end` at t = horizon - 1 so that an
  /// N-episode run with horizon N records both endpoints; exponential decay
  /// reaches `end` at t = horizon. Constant `end` afterwards.
  double value(std::size_t t) const;

  std::vector<FieldError> check() const;
  bool operator==(const EpsilonSchedule&) const = default;
};

struct Transition {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;

  bool operator==(const Transition&) const = default;
};

class InsufficientExperience : public std::runtime_error {
 public:
  InsufficientExperience(std::size_t have, std::size_t want)
      : std::runtime_error("insufficient experience: buffer holds " + std::to_string(have) +
                           " transitions, batch needs " + std::to_string(want)) {}
};

/// FIFO experience store D with a fixed capacity.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return items_.empty(); }

  /// i = 0 is the oldest retained transition.
  const Transition& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  /// k indices drawn uniformly with replacement, in the operator[] numbering.
  std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const;
  std::vector<Transition> sample_batch(std::size_t k, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // oldest element once the ring is full
};

enum class WeightInit { glorot, zeros };

struct AgentConfig {
  std::vector<std::size_t> hidden{256, 256};
  double gamma = 0.99;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 10000;
  double learning_rate = 1e-3;
  /// Copy online -> target after this many parameter updates.
  std::size_t target_sync_interval = 100;
  EpsilonSchedule epsilon;
  /// Rescale the mean gradient to this norm when it is larger; 0 disables clipping.
  double max_grad_norm = 0.0;
  WeightInit weight_init = WeightInit::glorot;

  std::vector<FieldError> check() const;
  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

KeyValues to_key_values(const AgentConfig& config, const std::string& prefix);
AgentConfig agent_config_from(KeyValues& kv, const std::string& prefix);

struct AgentCheckpoint;

/// Double DQN: the online network picks the bootstrap action, the target network scores it.
class DdqnAgent {
 public:
  DdqnAgent(std::size_t num_channels, AgentConfig config, std::uint64_t seed);

  /// Epsilon-greedy action at exploration clock `exploration_t`.
  std::size_t act(std::span<const double> state, std::size_t exploration_t);
  /// argmax_a Q_online(state, a), lowest index on ties.
  std::size_t greedy_policy(std::span<const double> state) const;

  void remember(Transition t);

  /// y = r if done, else r + gamma * Q_target(s', argmax_a Q_online(s', a)).
  double compute_target(const Transition& t) const;

  /// One SGD step on a uniformly sampled batch; nullopt when the buffer is smaller
  /// than batch_size. Returns the mean squared TD error before the update.
  std::optional<double> learn();

  std::size_t num_channels() const noexcept { return num_channels_; }
  const AgentConfig& config() const noexcept { return config_; }
  const nn::Mlp& online() const noexcept { return online_; }
  const nn::Mlp& target() const noexcept { return target_; }
  nn::Mlp& online() noexcept { return online_; }
  const ReplayBuffer& buffer() const noexcept { return buffer_; }
  std::size_t updates() const noexcept { return updates_; }
  const Rng& rng() const noexcept { return rng_; }

  AgentCheckpoint checkpoint() const;
  static DdqnAgent restore(const AgentCheckpoint& cp);

 private:
  std::size_t num_channels_;
  AgentConfig config_;
  nn::Mlp online_;
  nn::Mlp target_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::size_t updates_ = 0;
};

/// Both networks, hyperparameters and generator state; the replay buffer is not kept.
struct AgentCheckpoint {
  std::size_t num_channels = 0;
  AgentConfig config;
  nn::Mlp online;
  nn::Mlp target;
  std::string rng_state;
  std::size_t updates = 0;

  bool operator==(const AgentCheckpoint&) const = default;
};

void write_checkpoint(std::ostream& out, const AgentCheckpoint& cp);
AgentCheckpoint read_checkpoint(std::istream& in);
void save_checkpoint(const AgentCheckpoint& cp, const std::string& path);
AgentCheckpoint load_checkpoint(const std::string& path);

/// Index of the largest value; lowest index wins ties.
std::size_t argmax(std::span<const double> values);

}  // namespace antijam::agent
