#include "antijam/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace antijam::agent {

std::string to_string(EpsilonDecay decay) {
  return decay == EpsilonDecay::linear_per_episode ? "linear_per_episode" : "exponential_per_step";
}

double EpsilonSchedule::value(std::size_t t) const {
  const std::size_t h = std::max<std::size_t>(horizon, 1);
  if (t == 0) return start;
  if (decay == EpsilonDecay::linear_per_episode) {
    if (t + 1 >= h) return end;
    return start + (end - start) * static_cast<double>(t) / static_cast<double>(h - 1);
  }
  if (t >= h || start == end) return end;
  return start * std::pow(end / start, static_cast<double>(t) / static_cast<double>(h));
}

std::vector<FieldError> EpsilonSchedule::check() const {
  std::vector<FieldError> errors;
  if (!(start >= 0.0 && start <= 1.0)) errors.push_back({"epsilon_start", "must lie in [0, 1]"});
  if (!(end >= 0.0 && end <= start)) errors.push_back({"epsilon_end", "must lie in [0, epsilon_start]"});
  if (decay == EpsilonDecay::exponential_per_step && start > 0.0 && !(end > 0.0)) {
    errors.push_back({"epsilon_end", "must be positive for exponential decay"});
  }
  return errors;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t k, Rng& rng) const {
  if (k > items_.size()) throw InsufficientExperience(items_.size(), k);
  std::vector<std::size_t> idx(k);
  for (auto& i : idx) i = uniform_index(rng, items_.size());
  return idx;
}

std::vector<Transition> ReplayBuffer::sample_batch(std::size_t k, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(k);
  for (std::size_t i : sample_indices(k, rng)) out.push_back((*this)[i]);
  return out;
}

std::vector<FieldError> AgentConfig::check() const {
  std::vector<FieldError> errors;
  if (hidden.empty()) errors.push_back({"hidden", "needs at least one hidden layer"});
  for (auto h : hidden) {
    if (h == 0) errors.push_back({"hidden", "layer widths must be positive"});
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) errors.push_back({"gamma", "must lie in [0, 1)"});
  if (batch_size < 1) errors.push_back({"batch_size", "must be positive"});
  if (buffer_capacity < 1) errors.push_back({"buffer_capacity", "must be positive"});
  if (buffer_capacity < batch_size) errors.push_back({"buffer_capacity", "must be at least batch_size"});
  if (!(learning_rate > 0.0)) errors.push_back({"learning_rate", "must be positive"});
  if (target_sync_interval < 1) errors.push_back({"target_sync_interval", "must be positive"});
  if (!(max_grad_norm >= 0.0)) errors.push_back({"max_grad_norm", "must be non-negative"});
  for (auto& e : epsilon.check()) errors.push_back(std::move(e));
  return errors;
}

void AgentConfig::validate() const {
  const auto errors = check();
  if (!errors.empty()) throw ConfigError(errors.front().field, errors.front().message);
}

KeyValues to_key_values(const AgentConfig& c, const std::string& prefix) {
  std::string hidden;
  for (auto h : c.hidden) {
    if (!hidden.empty()) hidden += ',';
    hidden += std::to_string(h);
  }
  return {
      {prefix + "batch_size", std::to_string(c.batch_size)},
      {prefix + "buffer_capacity", std::to_string(c.buffer_capacity)},
      {prefix + "epsilon_decay", to_string(c.epsilon.decay)},
      {prefix + "epsilon_end", format_double(c.epsilon.end)},
      {prefix + "epsilon_horizon", std::to_string(c.epsilon.horizon)},
      {prefix + "epsilon_start", format_double(c.epsilon.start)},
      {prefix + "gamma", format_double(c.gamma)},
      {prefix + "hidden", hidden},
      {prefix + "learning_rate", format_double(c.learning_rate)},
      {prefix + "max_grad_norm", format_double(c.max_grad_norm)},
      {prefix + "target_sync_interval", std::to_string(c.target_sync_interval)},
      {prefix + "weight_init", c.weight_init == WeightInit::glorot ? "glorot" : "zeros"},
  };
}

AgentConfig agent_config_from(KeyValues& kv, const std::string& prefix) {
  AgentConfig c;
  auto key = [&](const char* name) { return prefix + name; };
  if (auto v = take(kv, key("hidden"))) {
    c.hidden.clear();
    std::string_view rest = *v;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      c.hidden.push_back(parse_uint(key("hidden"), rest.substr(0, comma)));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  if (auto v = take(kv, key("gamma"))) c.gamma = parse_double(key("gamma"), *v);
  if (auto v = take(kv, key("batch_size"))) c.batch_size = parse_uint(key("batch_size"), *v);
  if (auto v = take(kv, key("buffer_capacity"))) c.buffer_capacity = parse_uint(key("buffer_capacity"), *v);
  if (auto v = take(kv, key("learning_rate"))) c.learning_rate = parse_double(key("learning_rate"), *v);
  if (auto v = take(kv, key("target_sync_interval"))) {
    c.target_sync_interval = parse_uint(key("target_sync_interval"), *v);
  }
  if (auto v = take(kv, key("epsilon_start"))) c.epsilon.start = parse_double(key("epsilon_start"), *v);
  if (auto v = take(kv, key("epsilon_end"))) c.epsilon.end = parse_double(key("epsilon_end"), *v);
  if (auto v = take(kv, key("epsilon_horizon"))) c.epsilon.horizon = parse_uint(key("epsilon_horizon"), *v);
  if (auto v = take(kv, key("epsilon_decay"))) {
    if (*v == "linear_per_episode") {
      c.epsilon.decay = EpsilonDecay::linear_per_episode;
    } else if (*v == "exponential_per_step") {
      c.epsilon.decay = EpsilonDecay::exponential_per_step;
    } else {
      throw ConfigError(key("epsilon_decay"), "expected linear_per_episode or exponential_per_step");
    }
  }
  if (auto v = take(kv, key("max_grad_norm"))) c.max_grad_norm = parse_double(key("max_grad_norm"), *v);
  if (auto v = take(kv, key("weight_init"))) {
    if (*v == "glorot") {
      c.weight_init = WeightInit::glorot;
    } else if (*v == "zeros") {
      c.weight_init = WeightInit::zeros;
    } else {
      throw ConfigError(key("weight_init"), "expected glorot or zeros");
    }
  }
  return c;
}

DdqnAgent::DdqnAgent(std::size_t num_channels, AgentConfig config, std::uint64_t seed)
    : num_channels_(num_channels),
      config_(std::move(config)),
      online_(nn::Mlp::q_network(num_channels, config_.hidden)),
      target_(online_),
      buffer_(std::max<std::size_t>(config_.buffer_capacity, 1)),
      rng_(seed) {
  config_.validate();
  if (config_.weight_init == WeightInit::glorot) nn::init_parameters(online_, rng_());
  nn::copy_parameters(online_, target_);
}

std::size_t DdqnAgent::act(std::span<const double> state, std::size_t exploration_t) {
  const double eps = config_.epsilon.value(exploration_t);
  if (uniform_unit(rng_) < eps) return uniform_index(rng_, num_channels_);
  return greedy_policy(state);
}

std::size_t DdqnAgent::greedy_policy(std::span<const double> state) const {
  const Eigen::VectorXd q = nn::forward(online_, state);
  return argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
}

void DdqnAgent::remember(Transition t) {
  if (t.state.size() != num_channels_ || t.next_state.size() != num_channels_) {
    throw std::invalid_argument("transition state length differs from the channel count");
  }
  if (t.action >= num_channels_) throw std::out_of_range("transition action out of range");
  buffer_.push(std::move(t));
}

double DdqnAgent::compute_target(const Transition& t) const {
  if (t.done) return t.reward;
  const Eigen::VectorXd q_online = nn::forward(online_, t.next_state);
  const std::size_t a =
      argmax(std::span<const double>(q_online.data(), static_cast<std::size_t>(q_online.size())));
  const Eigen::VectorXd q_target = nn::forward(target_, t.next_state);
  return t.reward + config_.gamma * q_target(static_cast<Eigen::Index>(a));
}

std::optional<double> DdqnAgent::learn() {
  const std::size_t k = config_.batch_size;
  if (buffer_.size() < k) return std::nullopt;

  const auto idx = buffer_.sample_indices(k, rng_);
  const auto n = static_cast<Eigen::Index>(num_channels_);
  Eigen::MatrixXd states(n, static_cast<Eigen::Index>(k));
  Eigen::MatrixXd next_states(n, static_cast<Eigen::Index>(k));
  std::vector<std::size_t> actions(k);
  for (std::size_t b = 0; b < k; ++b) {
    const Transition& t = buffer_[idx[b]];
    const auto col = static_cast<Eigen::Index>(b);
    states.col(col) = Eigen::Map<const Eigen::VectorXd>(t.state.data(), n);
    next_states.col(col) = Eigen::Map<const Eigen::VectorXd>(t.next_state.data(), n);
    actions[b] = t.action;
  }

  // Every target is fixed before the update, matching compute_target column by column.
  const Eigen::MatrixXd q_online_next = nn::forward_batch(online_, next_states);
  const Eigen::MatrixXd q_target_next = nn::forward_batch(target_, next_states);
  std::vector<double> targets(k);
  for (std::size_t b = 0; b < k; ++b) {
    const Transition& t = buffer_[idx[b]];
    if (t.done) {
      targets[b] = t.reward;
      continue;
    }
    const auto col = static_cast<Eigen::Index>(b);
    const auto column = q_online_next.col(col);
    const std::size_t a = argmax(std::span<const double>(column.data(), num_channels_));
    targets[b] = t.reward + config_.gamma * q_target_next(static_cast<Eigen::Index>(a), col);
  }

  nn::Backprop bp = nn::backward_batch(online_, states, actions, targets);
  if (config_.max_grad_norm > 0.0) {
    const double norm = bp.grads.norm();
    if (norm > config_.max_grad_norm) bp.grads = bp.grads.scaled(config_.max_grad_norm / norm);
  }
  nn::sgd_step(online_, bp.grads, config_.learning_rate);
  ++updates_;
  if (updates_ % config_.target_sync_interval == 0) nn::copy_parameters(online_, target_);
  return bp.loss;
}

AgentCheckpoint DdqnAgent::checkpoint() const {
  return AgentCheckpoint{num_channels_, config_, online_, target_, rng_state(rng_), updates_};
}

DdqnAgent DdqnAgent::restore(const AgentCheckpoint& cp) {
  DdqnAgent agent(cp.num_channels, cp.config, 0);
  if (!cp.online.same_architecture(agent.online_) || !cp.target.same_architecture(agent.target_)) {
    throw std::invalid_argument("checkpoint networks do not match the configured architecture");
  }
  agent.online_ = cp.online;
  agent.target_ = cp.target;
  agent.rng_ = rng_from_state(cp.rng_state);
  agent.updates_ = cp.updates;
  return agent;
}

namespace {
constexpr const char* kCheckpointMagic = "antijam-checkpoint 1";
}

void write_checkpoint(std::ostream& out, const AgentCheckpoint& cp) {
  KeyValues kv = to_key_values(cp.config, "agent.");
  kv["num_channels"] = std::to_string(cp.num_channels);
  kv["updates"] = std::to_string(cp.updates);
  kv["rng"] = cp.rng_state;
  out << kCheckpointMagic << '\n' << join_key_values(kv) << '\n';
  out << "online\n";
  nn::write_mlp(out, cp.online);
  out << "target\n";
  nn::write_mlp(out, cp.target);
}

AgentCheckpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) throw ParseError(1, "not a checkpoint file");
  if (!std::getline(in, line)) throw ParseError(2, "missing hyperparameter line");
  AgentCheckpoint cp;
  try {
    KeyValues kv = split_key_values(line);
    cp.num_channels = parse_uint("num_channels", take(kv, "num_channels").value_or(""));
    cp.updates = parse_uint("updates", take(kv, "updates").value_or(""));
    cp.rng_state = take(kv, "rng").value_or("");
    cp.config = agent_config_from(kv, "agent.");
    if (!kv.empty()) throw ConfigError(kv.begin()->first, "unknown key");
    (void)rng_from_state(cp.rng_state);
  } catch (const std::exception& e) {
    throw ParseError(2, e.what());
  }
  if (!std::getline(in, line) || line != "online") throw ParseError(3, "expected 'online'");
  cp.online = nn::read_mlp(in, 3);
  const std::size_t after_online = 3 + 1 + [&] {
    std::size_t n = 0;
    for (const auto& l : cp.online.layers()) n += 2 + l.out_dim();
    return n;
  }();
  if (!std::getline(in, line) || line != "target") throw ParseError(after_online + 1, "expected 'target'");
  cp.target = nn::read_mlp(in, after_online + 1);
  if (!cp.online.same_architecture(cp.target)) throw ParseError(after_online + 1, "online/target mismatch");
  if (cp.online.input_dim() != cp.num_channels || cp.online.output_dim() != cp.num_channels) {
    throw ParseError(4, "network dims do not match num_channels");
  }
  return cp;
}

void save_checkpoint(const AgentCheckpoint& cp, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
    write_checkpoint(out, cp);
    out.flush();
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot move checkpoint into place at " + path);
  }
}

AgentCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace antijam::agent
