#include "antijam/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>
#include <stdexcept>

namespace antijam {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

agent::AgentConfig resolved_agent_config(const TrainConfig& config) {
  agent::AgentConfig a = config.agent;
  a.epsilon.horizon = config.effective_epsilon_horizon();
  return a;
}

env::EnvConfig seeded_env(const TrainConfig& config, Rng& master) {
  env::EnvConfig e = config.env;
  e.rng_seed = master() ^ config.env.rng_seed;
  return e;
}

}  // namespace

double rolling_average(std::span<const double> returns, std::size_t window) {
  if (returns.empty()) throw std::invalid_argument("rolling average of an empty series");
  if (window == 0) throw std::invalid_argument("rolling window must be positive");
  const std::size_t n = std::min(window, returns.size());
  double sum = 0.0;
  for (std::size_t i = returns.size() - n; i < returns.size(); ++i) sum += returns[i];
  return sum / static_cast<double>(n);
}

std::string make_run_id(const TrainConfig& config) {
  char buf[32];
  if (config.reproducible) {
    std::snprintf(buf, sizeof buf, "run-%016llx",
                  static_cast<unsigned long long>(fnv1a(join_key_values(to_key_values(config)))));
    return buf;
  }
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  const auto us = std::chrono::duration_cast<std::chrono::microseconds>(now).count();
  std::snprintf(buf, sizeof buf, "run-%llx", static_cast<unsigned long long>(us));
  return buf;
}

// The master generator seeds everything in a fixed order: environment first, then the agent.
Trainer::Trainer(TrainConfig config, TrainOptions options)
    : config_((validate(config), std::move(config))),
      options_(std::move(options)),
      master_(config_.seed),
      env_(seeded_env(config_, master_), config_.jammer),
      agent_(config_.env.num_channels, resolved_agent_config(config_), master_()) {}

RunLog Trainer::run() {
  RunLog log;
  log.config = config_;
  log.run_id = options_.run_id.empty() ? make_run_id(config_) : options_.run_id;
  log.created_at = config_.reproducible ? "1970-01-01T00:00:00Z" : utc_timestamp_now();

  std::unique_ptr<RunLogWriter> writer;
  std::filesystem::path run_dir;
  auto fail = [&](const std::exception& e) {
    log.status = RunStatus::failed;
    log.failure = e.what();
    if (writer) {
      try {
        writer->finish(log.status, log.failure);
      } catch (const std::exception&) {
      }
    }
    return log;
  };

  if (!config_.output_dir.empty()) {
    try {
      run_dir = config_.output_dir;
      std::filesystem::create_directories(run_dir);
      writer = std::make_unique<RunLogWriter>(run_dir / "run.log", log);
    } catch (const std::exception& e) {
      return fail(e);
    }
  }

  const bool per_step_epsilon = config_.agent.epsilon.decay == agent::EpsilonDecay::exponential_per_step;
  const auto& schedule = agent_.config().epsilon;
  std::vector<double> returns;
  returns.reserve(config_.episodes);
  std::size_t global_step = 0;
  log.status = RunStatus::completed;

  for (std::size_t ep = 0; ep < config_.episodes; ++ep) {
    if (options_.stop_requested && options_.stop_requested()) {
      log.status = RunStatus::stopped;
      break;
    }
    const auto started = std::chrono::steady_clock::now();
    EpisodeRecord rec;
    rec.index = ep;
    rec.epsilon = round2(schedule.value(per_step_epsilon ? global_step : ep));

    double episode_return = 0.0;
    env::ObservationVector obs = env_.reset();
    while (!env_.done()) {
      const std::size_t clock = per_step_epsilon ? global_step : ep;
      const std::size_t action = agent_.act(obs.normalized, clock);
      env::StepOutcome out = env_.step(action);
      if (options_.step_trace) options_.step_trace(ep, action, out);
      episode_return += out.reward;
      rec.jam_hits += out.info.jammed ? 1 : 0;
      rec.switches += out.info.switched ? 1 : 0;
      ++rec.steps;
      ++global_step;
      agent_.remember({obs.normalized, action, out.reward, out.observation.normalized, out.done});
      agent_.learn();
      obs = std::move(out.observation);
    }

    rec.episode_return = round2(episode_return);
    returns.push_back(rec.episode_return);
    rec.rolling_average = round2(rolling_average(returns, config_.rolling_window));
    if (!config_.reproducible) {
      rec.wall_time_ms = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                        std::chrono::steady_clock::now() - started)
                                                        .count());
    }
    log.records.push_back(rec);

    try {
      if (writer) writer->append(rec);
      if (!run_dir.empty() && config_.checkpoint_every > 0 && (ep + 1) % config_.checkpoint_every == 0) {
        agent::save_checkpoint(agent_.checkpoint(), (run_dir / "checkpoint.txt").string());
      }
    } catch (const std::exception& e) {
      return fail(e);
    }
    if (options_.progress) options_.progress(rec);

    if (config_.stop_on_solve && rec.rolling_average >= config_.solved_threshold) {
      log.status = RunStatus::solved;
      break;
    }
  }

  try {
    if (!run_dir.empty()) agent::save_checkpoint(agent_.checkpoint(), (run_dir / "checkpoint.txt").string());
    if (writer) writer->finish(log.status);
  } catch (const std::exception& e) {
    return fail(e);
  }
  return log;
}

RunLog train(const TrainConfig& config, TrainOptions options) {
  return Trainer(config, std::move(options)).run();
}

EvalStats evaluate(const nn::Mlp& q_network, const env::EnvConfig& env_config,
                   const env::JammerModel& jammer, std::size_t episodes) {
  if (episodes == 0) throw std::invalid_argument("empty evaluation");
  if (q_network.input_dim() != env_config.num_channels || q_network.output_dim() != env_config.num_channels) {
    throw std::invalid_argument("network has " + std::to_string(q_network.input_dim()) + " inputs but the environment has " +
                                std::to_string(env_config.num_channels) + " channels");
  }
  env::Environment env(env_config, jammer);
  double sum = 0.0, sum_sq = 0.0;
  std::size_t steps = 0, jams = 0, switches = 0;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    env::ObservationVector obs = env.reset();
    double ret = 0.0;
    while (!env.done()) {
      const Eigen::VectorXd q = nn::forward(q_network, obs.normalized);
      const std::size_t action = agent::argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
      env::StepOutcome out = env.step(action);
      ret += out.reward;
      jams += out.info.jammed ? 1 : 0;
      switches += out.info.switched ? 1 : 0;
      ++steps;
      obs = std::move(out.observation);
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  const double n = static_cast<double>(episodes);
  EvalStats s;
  s.mean_return = sum / n;
  s.std_return = std::sqrt(std::max(0.0, sum_sq / n - s.mean_return * s.mean_return));
  s.jam_rate = static_cast<double>(jams) / static_cast<double>(steps);
  s.switch_rate = static_cast<double>(switches) / static_cast<double>(steps);
  return s;
}

EvalStats evaluate(const agent::AgentCheckpoint& checkpoint, const env::EnvConfig& env_config,
                   const env::JammerModel& jammer, std::size_t episodes) {
  return evaluate(checkpoint.online, env_config, jammer, episodes);
}

}  // namespace antijam
