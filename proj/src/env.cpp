#include "antijam/env.hpp"

#include <cmath>
#include <stdexcept>

namespace antijam::env {

std::string to_string(UtilityMode mode) {
  return mode == UtilityMode::binary ? "binary" : "sinr";
}

UtilityMode utility_mode_from_string(const std::string& key, const std::string& text) {
  if (text == "binary") return UtilityMode::binary;
  if (text == "sinr") return UtilityMode::sinr;
  throw ConfigError(key, "expected binary or sinr, got '" + text + "'");
}

std::string to_string(JammerKind kind) {
  switch (kind) {
    case JammerKind::fixed: return "fixed";
    case JammerKind::sweep: return "sweep";
    case JammerKind::random_uniform: return "random_uniform";
    case JammerKind::markov: return "markov";
  }
  return "unknown";
}

std::vector<FieldError> EnvConfig::check() const {
  std::vector<FieldError> errors;
  if (num_channels < 2) errors.push_back({"num_channels", "must be at least 2"});
  if (steps_per_episode < 1) errors.push_back({"steps_per_episode", "must be positive"});
  if (!(switching_cost >= 0.0)) {
    errors.push_back({"switching_cost", "must be non-negative"});
  } else if (switching_cost >= kMaxUtility) {
    errors.push_back({"switching_cost", "must be below the maximum per-step utility (1)"});
  }
  if (!(jammer_power > 0.0)) errors.push_back({"jammer_power", "must be positive"});
  if (!(noise_floor >= 0.0)) errors.push_back({"noise_floor", "must be non-negative"});
  if (!(adjacent_leakage >= 0.0 && adjacent_leakage < 1.0)) {
    errors.push_back({"adjacent_leakage", "must lie in [0, 1)"});
  }
  if (utility_mode == UtilityMode::sinr) {
    if (!(noise_floor > 0.0)) errors.push_back({"noise_floor", "must be positive in sinr mode"});
    if (!(signal_power > 0.0)) errors.push_back({"signal_power", "must be positive in sinr mode"});
  }
  return errors;
}

void EnvConfig::validate() const {
  const auto errors = check();
  if (!errors.empty()) throw ConfigError(errors.front().field, errors.front().message);
}

JammerModel JammerModel::fixed(std::size_t channel) {
  JammerModel j(JammerKind::fixed);
  j.anchor_ = channel;
  j.channel_ = channel;
  return j;
}

JammerModel JammerModel::sweep(std::size_t start, std::size_t stride, int direction) {
  JammerModel j(JammerKind::sweep);
  j.anchor_ = start;
  j.channel_ = start;
  j.stride_ = stride;
  j.direction_ = direction;
  return j;
}

JammerModel JammerModel::from_parts(JammerKind kind, std::size_t channel, std::size_t stride,
                                    int direction, double stay_probability) {
  JammerModel j(kind);
  j.anchor_ = channel;
  j.channel_ = channel;
  j.stride_ = stride;
  j.direction_ = direction;
  j.stay_probability_ = stay_probability;
  return j;
}

JammerModel JammerModel::random_uniform() { return JammerModel(JammerKind::random_uniform); }

JammerModel JammerModel::markov(double stay_probability) {
  JammerModel j(JammerKind::markov);
  j.stay_probability_ = stay_probability;
  return j;
}

std::vector<FieldError> JammerModel::check(std::size_t num_channels) const {
  std::vector<FieldError> errors;
  if ((kind_ == JammerKind::fixed || kind_ == JammerKind::sweep) && anchor_ >= num_channels) {
    errors.push_back({"channel", "must be below num_channels"});
  }
  if (kind_ == JammerKind::sweep) {
    if (stride_ < 1) errors.push_back({"stride", "must be at least 1"});
    if (direction_ != 1 && direction_ != -1) errors.push_back({"direction", "must be 1 or -1"});
  }
  if (kind_ == JammerKind::markov && !(stay_probability_ >= 0.0 && stay_probability_ <= 1.0)) {
    errors.push_back({"stay_probability", "must lie in [0, 1]"});
  }
  return errors;
}

void JammerModel::validate(std::size_t num_channels) const {
  const auto errors = check(num_channels);
  if (!errors.empty()) throw ConfigError(errors.front().field, errors.front().message);
}

void JammerModel::reset(Rng& rng, std::size_t num_channels) {
  switch (kind_) {
    case JammerKind::fixed:
    case JammerKind::sweep:
      channel_ = anchor_;
      break;
    case JammerKind::random_uniform:
    case JammerKind::markov:
      channel_ = uniform_index(rng, num_channels);
      break;
  }
}

void JammerModel::advance(Rng& rng, std::size_t num_channels) {
  switch (kind_) {
    case JammerKind::fixed:
      break;
    case JammerKind::sweep: {
      const std::size_t hop = stride_ % num_channels;
      channel_ = direction_ > 0 ? (channel_ + hop) % num_channels
                                : (channel_ + num_channels - hop) % num_channels;
      break;
    }
    case JammerKind::random_uniform:
      channel_ = uniform_index(rng, num_channels);
      break;
    case JammerKind::markov:
      if (uniform_unit(rng) >= stay_probability_) {
        const std::size_t k = uniform_index(rng, num_channels - 1);
        channel_ = k >= channel_ ? k + 1 : k;
      }
      break;
  }
}

double interference(std::size_t channel, std::size_t jammer_channel, const EnvConfig& config) {
  if (channel == jammer_channel) return config.jammer_power;
  const std::size_t gap = channel > jammer_channel ? channel - jammer_channel : jammer_channel - channel;
  return gap == 1 ? config.adjacent_leakage * config.jammer_power : 0.0;
}

double utility(std::size_t transmit_channel, std::size_t jammer_channel, const EnvConfig& config) {
  if (config.utility_mode == UtilityMode::binary) return 1.0;
  const double noise = config.noise_floor;
  const double p = interference(transmit_channel, jammer_channel, config);
  return std::log2(1.0 + config.signal_power / (p + noise)) /
         std::log2(1.0 + config.signal_power / noise);
}

double compute_reward(std::size_t transmit_channel, std::size_t jammer_channel, std::size_t action,
                      std::optional<std::size_t> previous_action, const EnvConfig& config) {
  if (transmit_channel >= config.num_channels || jammer_channel >= config.num_channels ||
      action >= config.num_channels ||
      (previous_action && *previous_action >= config.num_channels)) {
    throw std::out_of_range("channel index out of range");
  }
  if (transmit_channel == jammer_channel) return 0.0;
  const bool switched = previous_action.has_value() && *previous_action != action;
  return utility(transmit_channel, jammer_channel, config) -
         (switched ? config.switching_cost : 0.0);
}

ObservationVector received_powers(std::size_t jammer_channel, const EnvConfig& config, Rng* noise) {
  ObservationVector obs;
  obs.powers.resize(config.num_channels);
  obs.normalized.resize(config.num_channels);
  const double scale = config.jammer_power + config.noise_floor;
  for (std::size_t i = 0; i < config.num_channels; ++i) {
    double p = interference(i, jammer_channel, config);
    if (noise != nullptr && config.noise_floor > 0.0) p += config.noise_floor * uniform_unit(*noise);
    obs.powers[i] = p;
    obs.normalized[i] = p / scale;
  }
  return obs;
}

Environment::Environment(EnvConfig config, JammerModel jammer)
    : config_(std::move(config)), jammer_(std::move(jammer)), rng_(config_.rng_seed) {
  config_.validate();
  jammer_.validate(config_.num_channels);
}

ObservationVector Environment::reset() {
  jammer_.reset(rng_, config_.num_channels);
  step_ = 0;
  started_ = true;
  previous_action_.reset();
  return received_powers(jammer_.channel(), config_, &rng_);
}

StepOutcome Environment::step(std::size_t action) {
  if (!started_) throw std::logic_error("step called before reset");
  if (done()) throw std::logic_error("step called after the episode finished");
  if (action >= config_.num_channels) {
    throw std::out_of_range("action " + std::to_string(action) + " outside [0, " +
                            std::to_string(config_.num_channels) + ")");
  }
  StepOutcome out;
  const std::size_t jammer_now = jammer_.channel();
  out.reward = compute_reward(action, jammer_now, action, previous_action_, config_);
  out.info.jammed = action == jammer_now;
  out.info.switched = previous_action_.has_value() && *previous_action_ != action;
  out.info.jammer_channel = jammer_now;

  jammer_.advance(rng_, config_.num_channels);
  previous_action_ = action;
  ++step_;
  out.done = done();
  out.observation = received_powers(jammer_.channel(), config_, &rng_);
  return out;
}

KeyValues to_key_values(const EnvConfig& c, const std::string& prefix) {
  return {
      {prefix + "adjacent_leakage", format_double(c.adjacent_leakage)},
      {prefix + "jammer_power", format_double(c.jammer_power)},
      {prefix + "noise_floor", format_double(c.noise_floor)},
      {prefix + "num_channels", std::to_string(c.num_channels)},
      {prefix + "rng_seed", std::to_string(c.rng_seed)},
      {prefix + "signal_power", format_double(c.signal_power)},
      {prefix + "steps_per_episode", std::to_string(c.steps_per_episode)},
      {prefix + "switching_cost", format_double(c.switching_cost)},
      {prefix + "utility_mode", to_string(c.utility_mode)},
  };
}

EnvConfig env_config_from(KeyValues& kv, const std::string& prefix) {
  EnvConfig c;
  bool noise_given = false;
  if (auto v = take(kv, prefix + "num_channels")) c.num_channels = parse_uint(prefix + "num_channels", *v);
  if (auto v = take(kv, prefix + "steps_per_episode")) {
    c.steps_per_episode = parse_uint(prefix + "steps_per_episode", *v);
  }
  if (auto v = take(kv, prefix + "switching_cost")) c.switching_cost = parse_double(prefix + "switching_cost", *v);
  if (auto v = take(kv, prefix + "jammer_power")) c.jammer_power = parse_double(prefix + "jammer_power", *v);
  if (auto v = take(kv, prefix + "noise_floor")) {
    c.noise_floor = parse_double(prefix + "noise_floor", *v);
    noise_given = true;
  }
  if (auto v = take(kv, prefix + "adjacent_leakage")) {
    c.adjacent_leakage = parse_double(prefix + "adjacent_leakage", *v);
  }
  if (auto v = take(kv, prefix + "utility_mode")) {
    c.utility_mode = utility_mode_from_string(prefix + "utility_mode", *v);
  }
  if (auto v = take(kv, prefix + "signal_power")) c.signal_power = parse_double(prefix + "signal_power", *v);
  if (auto v = take(kv, prefix + "rng_seed")) c.rng_seed = parse_uint(prefix + "rng_seed", *v);
  if (!noise_given) c.noise_floor = 0.01 * c.jammer_power;
  return c;
}

KeyValues to_key_values(const JammerModel& j, const std::string& prefix) {
  return {
      {prefix + "channel", std::to_string(j.fixed_channel())},
      {prefix + "direction", std::to_string(j.direction())},
      {prefix + "kind", to_string(j.kind())},
      {prefix + "stay_probability", format_double(j.stay_probability())},
      {prefix + "stride", std::to_string(j.stride())},
  };
}

JammerModel jammer_from(KeyValues& kv, const std::string& prefix) {
  std::string kind = take(kv, prefix + "kind").value_or("sweep");
  std::size_t channel = 0;
  std::size_t stride = 1;
  int direction = 1;
  double stay = 0.9;
  if (auto v = take(kv, prefix + "channel")) channel = parse_uint(prefix + "channel", *v);
  if (auto v = take(kv, prefix + "stride")) stride = parse_uint(prefix + "stride", *v);
  if (auto v = take(kv, prefix + "direction")) direction = static_cast<int>(parse_int(prefix + "direction", *v));
  if (auto v = take(kv, prefix + "stay_probability")) stay = parse_double(prefix + "stay_probability", *v);

  JammerKind parsed;
  if (kind == "fixed") {
    parsed = JammerKind::fixed;
  } else if (kind == "sweep") {
    parsed = JammerKind::sweep;
  } else if (kind == "random_uniform") {
    parsed = JammerKind::random_uniform;
  } else if (kind == "markov") {
    parsed = JammerKind::markov;
  } else {
    throw ConfigError(prefix + "kind", "expected fixed, sweep, random_uniform or markov, got '" + kind + "'");
  }
  return JammerModel::from_parts(parsed, channel, stride, direction, stay);
}

}  // namespace antijam::env
