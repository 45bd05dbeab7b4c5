#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "antijam/insights.hpp"
#include "antijam/run_log.hpp"

namespace antijam::service {

struct ServiceConfig {
  std::filesystem::path data_dir = "runs";
  std::optional<insights::LlmEndpointConfig> llm;
  std::size_t max_concurrent_runs = 4;
};

/// Live state of one run. Records are published by value from the training
/// thread; readers get snapshots.
class RunHandle {
 public:
  explicit RunHandle(RunLog initial);
  ~RunHandle();

  const std::string& run_id() const noexcept { return run_id_; }

  RunLog snapshot() const;
  RunStatus status() const;

  void publish(const EpisodeRecord& record);
  void finish(RunStatus status, const std::string& failure);

  void request_stop() noexcept { stop_.store(true); }
  bool stop_requested() const noexcept { return stop_.load(); }

  struct Update {
    std::vector<EpisodeRecord> records;  // everything from the requested index on
    std::optional<RunStatus> terminal;   // set once the run has ended
  };
  /// Waits until a record with index >= `from` exists or the run ends, up to `timeout`.
  Update wait_for(std::size_t from, std::chrono::milliseconds timeout) const;
  /// Waits for a terminal status; returns the status at return.
  RunStatus wait_terminal(std::chrono::milliseconds timeout) const;

  void attach(std::thread worker);
  void join();

 private:
  std::string run_id_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  RunLog log_;
  std::atomic<bool> stop_{false};
  std::thread worker_;
};

/// REST + server-sent events facade over the trainer and the insight layer.
///
///   GET  /health
///   POST /runs                  flat or nested JSON TrainConfig -> 202 {run_id}
///   GET  /runs                  list
///   GET  /runs/{id}             status, latest record, summary so far
///   GET  /runs/{id}/stream      text/event-stream of run-log record lines
///   POST /runs/{id}/explain     InsightReport
///   POST /runs/{id}/stop        cooperative stop at the next episode boundary
class Service {
 public:
  /// Creates the data directory, checks it is writable and reloads persisted runs.
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Returns the bound port (useful with port 0). Throws on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  /// Stops accepting requests, closes streams, stops runs and waits for them.
  void stop();

  std::shared_ptr<RunHandle> find(const std::string& run_id) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace antijam::service
