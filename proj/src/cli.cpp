#include "antijam/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "antijam/insights.hpp"
#include "antijam/service.hpp"
#include "antijam/trainer.hpp"

namespace antijam::cli {

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kData = 3;

struct TrainArgs {
  std::string config;
  std::optional<std::size_t> episodes;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> sets;
};

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  std::size_t episodes = 10;
  std::optional<std::uint64_t> seed;
};

struct ReportArgs {
  std::string log;
  std::string llm_config;
  std::string out;
};

struct ServeArgs {
  std::string bind = "127.0.0.1:8080";
  std::string data = "runs";
  std::string llm_config;
  std::size_t max_runs = 4;
};

KeyValues config_with_overrides(const TrainArgs& a) {
  KeyValues kv = read_key_value_file(a.config);
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(s, "--set expects key=value");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (a.episodes) kv["episodes"] = std::to_string(*a.episodes);
  if (a.seed) kv["seed"] = std::to_string(*a.seed);
  if (a.out) kv["output_dir"] = *a.out;
  return kv;
}

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg;
  try {
    cfg = train_config_from(config_with_overrides(a));
    if (cfg.output_dir.empty()) cfg.output_dir = "run";
    validate(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }
  TrainOptions options;
  options.progress = [](const EpisodeRecord& r) {
    std::cout << "ep=" << r.index << " return=" << format_fixed2(r.episode_return)
              << " roll=" << format_fixed2(r.rolling_average) << " eps=" << format_fixed2(r.epsilon) << std::endl;
  };
  const RunLog log = train(cfg, std::move(options));
  std::cout << "status=" << to_string(log.status) << " run_id=" << log.run_id
            << " log=" << (std::filesystem::path(cfg.output_dir) / "run.log").string() << std::endl;
  if (log.status == RunStatus::failed) {
    std::cerr << "training failed: " << log.failure << '\n';
    return kData;
  }
  return log.status == RunStatus::stopped ? 1 : kOk;
}

int cmd_eval(const EvalArgs& a) {
  TrainConfig cfg;
  try {
    cfg = load_train_config(a.config);
    if (a.seed) cfg.env.rng_seed = *a.seed;
    validate(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }
  try {
    const auto cp = agent::load_checkpoint(a.checkpoint);
    const EvalStats s = evaluate(cp, cfg.env, cfg.jammer, a.episodes);
    std::cout << "mean_return=" << format_fixed2(s.mean_return) << " std=" << format_fixed2(s.std_return)
              << " jam_rate=" << format_double(s.jam_rate) << " switch_rate=" << format_double(s.switch_rate)
              << std::endl;
  } catch (const std::exception& e) {
    std::cerr << "evaluation failed: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

int cmd_report(const ReportArgs& a) {
  std::optional<insights::LlmEndpointConfig> llm;
  if (!a.llm_config.empty()) {
    try {
      llm = insights::load_llm_config(a.llm_config);
    } catch (const ConfigError& e) {
      std::cerr << "LLM config error: " << e.what() << '\n';
      return kUsage;
    }
  }
  RunLog log;
  try {
    log = load_run_log(a.log);
  } catch (const std::exception& e) {
    std::cerr << "cannot read run log " << a.log << ": " << e.what() << '\n';
    return kData;
  }
  if (log.records.empty()) {
    std::cerr << "run log " << a.log << " has no episode records\n";
    return kData;
  }
  const auto report = insights::generate_report(log, llm);
  if (!report.warning.empty()) std::cerr << "warning: " << report.warning << '\n';
  std::cout << "== prompt ==\n" << report.prompt << "\n== narrative (" << insights::to_string(report.source)
            << ") ==\n" << report.narrative << std::endl;
  if (!a.out.empty()) {
    try {
      insights::save_report(report, a.out);
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return kData;
    }
  }
  return kOk;
}

int cmd_serve(const ServeArgs& a) {
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "--bind expects HOST:PORT\n";
    return kUsage;
  }
  const std::string host = a.bind.substr(0, colon);
  int port = 0;
  try {
    port = static_cast<int>(parse_int("--bind", a.bind.substr(colon + 1)));
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  }

  service::ServiceConfig cfg;
  cfg.data_dir = a.data;
  cfg.max_concurrent_runs = a.max_runs;
  if (!a.llm_config.empty()) {
    try {
      cfg.llm = insights::load_llm_config(a.llm_config);
    } catch (const ConfigError& e) {
      std::cerr << "LLM config error: " << e.what() << '\n';
      return kUsage;
    }
  }

  // Signals are taken synchronously by one thread; every other thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<service::Service> svc;
  int bound = 0;
  try {
    svc = std::make_unique<service::Service>(cfg);
    bound = svc->bind(host, port);
  } catch (const std::exception& e) {
    std::cerr << "startup failed: " << e.what() << '\n';
    return kUsage;
  }
  std::cout << "listening on http://" << host << ':' << bound << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    svc->stop();
  });
  svc->listen();
  svc->stop();
  // listen() can also return on its own; wake the waiter so it can be joined.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  std::cout << "shutdown complete" << std::endl;
  return kOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Anti-jamming channel selection with a double DQN agent and training reports"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train an agent and write run.log and checkpoint.txt");
  train_cmd->add_option("--config", train_args.config, "key=value config file")->required();
  train_cmd->add_option("--episodes", train_args.episodes, "Override episodes");
  train_cmd->add_option("--seed", train_args.seed, "Override seed");
  train_cmd->add_option("--out", train_args.out, "Output directory (run.log, checkpoint.txt)");
  train_cmd->add_option("--set", train_args.sets, "Override any config key, KEY=VALUE (repeatable)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint.txt from a training run")->required();
  eval_cmd->add_option("--config", eval_args.config, "Config file describing the environment")->required();
  eval_cmd->add_option("--episodes", eval_args.episodes, "Evaluation episodes")->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.seed, "Environment noise seed");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Summarize a run log into a prompt and narrative");
  report_cmd->add_option("--log", report_args.log, "run.log to summarize")->required();
  report_cmd->add_option("--llm-config", report_args.llm_config, "LLM endpoint config file");
  report_cmd->add_option("--out", report_args.out, "Also write the report as JSON");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--bind", serve_args.bind, "HOST:PORT (port 0 picks a free port)")->capture_default_str();
  serve_cmd->add_option("--data", serve_args.data, "Data directory for runs")->capture_default_str();
  serve_cmd->add_option("--llm-config", serve_args.llm_config, "LLM endpoint config file");
  serve_cmd->add_option("--max-runs", serve_args.max_runs, "Maximum concurrent runs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*train_cmd) return cmd_train(train_args);
  if (*eval_cmd) return cmd_eval(eval_args);
  if (*report_cmd) return cmd_report(report_args);
  return cmd_serve(serve_args);
}

}  // namespace antijam::cli
