#include "antijam/config.hpp"

namespace antijam {

std::size_t TrainConfig::effective_epsilon_horizon() const {
  if (agent.epsilon.horizon > 0) return agent.epsilon.horizon;
  return agent.epsilon.decay == agent::EpsilonDecay::linear_per_episode
             ? episodes
             : episodes * env.steps_per_episode;
}

std::vector<FieldError> check(const TrainConfig& c) {
  std::vector<FieldError> errors;
  for (auto& e : c.env.check()) errors.push_back({"env." + e.field, e.message});
  for (auto& e : c.jammer.check(c.env.num_channels)) errors.push_back({"jammer." + e.field, e.message});
  for (auto& e : c.agent.check()) errors.push_back({"agent." + e.field, e.message});
  if (c.episodes < 1) errors.push_back({"episodes", "must be positive"});
  if (c.rolling_window < 1) {
    errors.push_back({"rolling_window", "must be positive"});
  } else if (c.rolling_window > c.episodes) {
    errors.push_back({"rolling_window", "must not exceed episodes"});
  }
  const double max_return = static_cast<double>(c.env.steps_per_episode) * env::EnvConfig::kMaxUtility;
  if (!(c.solved_threshold <= max_return)) {
    errors.push_back({"solved_threshold", "exceeds the maximum attainable return"});
  }
  return errors;
}

void validate(const TrainConfig& c) {
  const auto errors = check(c);
  if (!errors.empty()) throw ConfigError(errors.front().field, errors.front().message);
}

KeyValues to_key_values(const TrainConfig& c) {
  KeyValues kv = env::to_key_values(c.env, "env.");
  kv.merge(env::to_key_values(c.jammer, "jammer."));
  kv.merge(agent::to_key_values(c.agent, "agent."));
  kv["checkpoint_every"] = std::to_string(c.checkpoint_every);
  kv["episodes"] = std::to_string(c.episodes);
  kv["output_dir"] = c.output_dir;
  kv["reproducible"] = c.reproducible ? "true" : "false";
  kv["rolling_window"] = std::to_string(c.rolling_window);
  kv["seed"] = std::to_string(c.seed);
  kv["solved_threshold"] = format_double(c.solved_threshold);
  kv["stop_on_solve"] = c.stop_on_solve ? "true" : "false";
  return kv;
}

TrainConfig train_config_from(KeyValues kv) {
  TrainConfig c;
  c.env = env::env_config_from(kv, "env.");
  c.jammer = env::jammer_from(kv, "jammer.");
  c.agent = agent::agent_config_from(kv, "agent.");
  if (auto v = take(kv, "episodes")) c.episodes = parse_uint("episodes", *v);
  if (auto v = take(kv, "solved_threshold")) c.solved_threshold = parse_double("solved_threshold", *v);
  if (auto v = take(kv, "rolling_window")) c.rolling_window = parse_uint("rolling_window", *v);
  if (auto v = take(kv, "seed")) c.seed = parse_uint("seed", *v);
  if (auto v = take(kv, "checkpoint_every")) c.checkpoint_every = parse_uint("checkpoint_every", *v);
  if (auto v = take(kv, "output_dir")) c.output_dir = *v;
  if (auto v = take(kv, "stop_on_solve")) c.stop_on_solve = parse_bool("stop_on_solve", *v);
  if (auto v = take(kv, "reproducible")) c.reproducible = parse_bool("reproducible", *v);
  if (!kv.empty()) throw ConfigError(kv.begin()->first, "unknown config key");
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  return train_config_from(read_key_value_file(path));
}

}  // namespace antijam
