#include "antijam/service.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <random>

#include <httplib.h>

#include "antijam/trainer.hpp"

namespace antijam::service {

using nlohmann::json;
using namespace std::chrono_literals;

RunHandle::RunHandle(RunLog initial) : run_id_(initial.run_id), log_(std::move(initial)) {}

RunHandle::~RunHandle() {
  request_stop();
  join();
}

RunLog RunHandle::snapshot() const {
  std::lock_guard lock(mu_);
  return log_;
}

RunStatus RunHandle::status() const {
  std::lock_guard lock(mu_);
  return log_.status;
}

void RunHandle::publish(const EpisodeRecord& record) {
  {
    std::lock_guard lock(mu_);
    log_.records.push_back(record);
  }
  cv_.notify_all();
}

void RunHandle::finish(RunStatus status, const std::string& failure) {
  {
    std::lock_guard lock(mu_);
    log_.status = status;
    log_.failure = failure;
  }
  cv_.notify_all();
}

RunHandle::Update RunHandle::wait_for(std::size_t from, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return log_.records.size() > from || is_terminal(log_.status); });
  Update u;
  if (from < log_.records.size()) {
    u.records.assign(log_.records.begin() + static_cast<std::ptrdiff_t>(from), log_.records.end());
  }
  if (is_terminal(log_.status)) u.terminal = log_.status;
  return u;
}

RunStatus RunHandle::wait_terminal(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return is_terminal(log_.status); });
  return log_.status;
}

void RunHandle::attach(std::thread worker) { worker_ = std::move(worker); }

void RunHandle::join() {
  if (worker_.joinable() && worker_.get_id() != std::this_thread::get_id()) worker_.join();
}

namespace {

json record_json(const EpisodeRecord& r) {
  return {
      {"index", r.index},   {"return", r.episode_return}, {"rolling_average", r.rolling_average},
      {"epsilon", r.epsilon}, {"steps", r.steps},         {"jam_hits", r.jam_hits},
      {"switches", r.switches}, {"wall_time_ms", r.wall_time_ms},
  };
}

void flatten(const json& node, const std::string& prefix, KeyValues& out) {
  for (const auto& [key, value] : node.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      flatten(value, name, out);
    } else if (value.is_string()) {
      out[name] = value.get<std::string>();
    } else if (value.is_boolean()) {
      out[name] = value.get<bool>() ? "true" : "false";
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      out[name] = value.dump();
    } else if (value.is_number_float()) {
      out[name] = format_double(value.get<double>());
    } else {
      throw ConfigError(name, "expected a string, number or boolean");
    }
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

std::string sse_event(const std::string& event, const std::string& data) {
  return "event: " + event + "\ndata: " + data + "\n\n";
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  httplib::Server server;
  mutable std::mutex registry_mu;
  std::vector<std::shared_ptr<RunHandle>> runs;  // creation order
  std::atomic<bool> shutting_down{false};
  std::atomic<std::uint64_t> id_counter{0};
  std::mt19937_64 id_rng{std::random_device{}()};

  std::shared_ptr<RunHandle> find(const std::string& id) const {
    std::lock_guard lock(registry_mu);
    for (const auto& r : runs) {
      if (r->run_id() == id) return r;
    }
    return nullptr;
  }

  std::string new_run_id() {
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "run-%llx-%llu-%04llx", static_cast<unsigned long long>(us),
                  static_cast<unsigned long long>(id_counter.fetch_add(1)),
                  static_cast<unsigned long long>(id_rng() & 0xffff));
    return buf;
  }

  void recover() {
    for (const auto& entry : std::filesystem::directory_iterator(config.data_dir)) {
      const auto log_path = entry.path() / "run.log";
      if (!entry.is_directory() || !std::filesystem::exists(log_path)) continue;
      try {
        RunLog log = load_run_log(log_path);
        if (log.run_id.empty()) log.run_id = entry.path().filename().string();
        if (!is_terminal(log.status)) {
          log.status = RunStatus::failed;
          log.failure = "interrupted before completion";
        }
        runs.push_back(std::make_shared<RunHandle>(std::move(log)));
      } catch (const std::exception& e) {
        std::cerr << "skipping unreadable run " << log_path << ": " << e.what() << '\n';
      }
    }
    std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) {
      const auto la = a->snapshot();
      const auto lb = b->snapshot();
      return std::tie(la.created_at, la.run_id) < std::tie(lb.created_at, lb.run_id);
    });
  }

  void start_run(TrainConfig cfg, httplib::Response& res) {
    std::shared_ptr<RunHandle> handle;
    {
      std::lock_guard lock(registry_mu);
      const auto active = std::count_if(runs.begin(), runs.end(),
                                        [](const auto& r) { return r->status() == RunStatus::running; });
      if (static_cast<std::size_t>(active) >= config.max_concurrent_runs) {
        send_error(res, 429, "at capacity: " + std::to_string(config.max_concurrent_runs) + " runs active");
        return;
      }
      RunLog initial;
      initial.run_id = new_run_id();
      cfg.output_dir = (config.data_dir / initial.run_id).string();
      initial.config = cfg;
      initial.created_at = utc_timestamp_now();
      handle = std::make_shared<RunHandle>(std::move(initial));
      runs.push_back(handle);
    }
    RunHandle* raw = handle.get();
    handle->attach(std::thread([raw, cfg = std::move(cfg)] {
      TrainOptions options;
      options.run_id = raw->run_id();
      options.progress = [raw](const EpisodeRecord& r) { raw->publish(r); };
      options.stop_requested = [raw] { return raw->stop_requested(); };
      try {
        RunLog log = Trainer(cfg, std::move(options)).run();
        raw->finish(log.status, log.failure);
      } catch (const std::exception& e) {
        raw->finish(RunStatus::failed, e.what());
      }
    }));
    send_json(res, 202, {{"run_id", handle->run_id()}});
  }

  json run_json(const RunLog& log) const {
    json j = {
        {"run_id", log.run_id},
        {"status", to_string(log.status)},
        {"created_at", log.created_at},
        {"record_count", log.records.size()},
        {"config", to_key_values(log.config)},
        {"latest", nullptr},
        {"summary", nullptr},
    };
    if (!log.failure.empty()) j["failure"] = log.failure;
    if (!log.records.empty()) {
      j["latest"] = record_json(log.records.back());
      j["summary"] = insights::to_json(insights::summarize(log));
    }
    return j;
  }

  void routes() {
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    server.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) {
      json body = req.body.empty() ? json::object() : json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) {
        send_error(res, 400, "request body must be a JSON object");
        return;
      }
      TrainConfig cfg;
      try {
        KeyValues kv;
        flatten(body, "", kv);
        cfg = train_config_from(std::move(kv));
      } catch (const ConfigError& e) {
        send_json(res, 400, {{"errors", json::array({{{"field", e.field()}, {"message", e.what()}}})}});
        return;
      }
      const auto errors = check(cfg);
      if (!errors.empty()) {
        json list = json::array();
        for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.field + ": " + e.message}});
        send_json(res, 400, {{"errors", list}});
        return;
      }
      start_run(std::move(cfg), res);
    });

    server.Get("/runs", [this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      std::lock_guard lock(registry_mu);
      for (const auto& r : runs) {
        const RunLog log = r->snapshot();
        list.push_back({{"run_id", log.run_id},
                        {"status", to_string(log.status)},
                        {"created_at", log.created_at},
                        {"record_count", log.records.size()}});
      }
      send_json(res, 200, {{"runs", list}});
    });

    server.Get(R"(/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto handle = find(req.matches[1]);
      if (!handle) return send_error(res, 404, "unknown run");
      send_json(res, 200, run_json(handle->snapshot()));
    });

    server.Get(R"(/runs/([^/]+)/stream)", [this](const httplib::Request& req, httplib::Response& res) {
      auto handle = find(req.matches[1]);
      if (!handle) return send_error(res, 404, "unknown run");
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [this, handle, next = std::size_t{0}](std::size_t, httplib::DataSink& sink) mutable {
            if (shutting_down.load()) return false;
            const auto update = handle->wait_for(next, 250ms);
            for (const auto& r : update.records) {
              const std::string event = sse_event("episode", format_record_line(r));
              if (!sink.write(event.data(), event.size())) return false;
              ++next;
            }
            if (update.terminal) {
              const std::string event = sse_event("status", to_string(*update.terminal));
              if (!sink.write(event.data(), event.size())) return false;
              sink.done();
            }
            return true;
          });
    });

    server.Post(R"(/runs/([^/]+)/explain)", [this](const httplib::Request& req, httplib::Response& res) {
      auto handle = find(req.matches[1]);
      if (!handle) return send_error(res, 404, "unknown run");
      const RunLog log = handle->snapshot();
      if (log.records.empty()) return send_error(res, 409, "run has no episode records yet");
      const insights::InsightReport report = insights::generate_report(log, config.llm);
      try {
        const auto dir = config.data_dir / log.run_id / "reports";
        std::filesystem::create_directories(dir);
        std::size_t n = 0;
        while (std::filesystem::exists(dir / ("report-" + std::to_string(n) + ".json"))) ++n;
        insights::save_report(report, dir / ("report-" + std::to_string(n) + ".json"));
      } catch (const std::exception& e) {
        std::cerr << "could not persist report for " << log.run_id << ": " << e.what() << '\n';
      }
      send_json(res, 200, insights::to_json(report));
    });

    server.Post(R"(/runs/([^/]+)/stop)", [this](const httplib::Request& req, httplib::Response& res) {
      auto handle = find(req.matches[1]);
      if (!handle) return send_error(res, 404, "unknown run");
      RunStatus status = handle->status();
      if (status == RunStatus::running) {
        handle->request_stop();
        status = handle->wait_terminal(10s);
      }
      send_json(res, 200, {{"run_id", handle->run_id()}, {"status", to_string(status)}});
    });
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  auto& dir = impl_->config.data_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto probe = dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (ec || !out || !(out << "ok") || !out.flush()) {
      throw std::runtime_error("data directory " + dir.string() + " is not writable");
    }
  }
  std::filesystem::remove(probe, ec);
  if (impl_->config.max_concurrent_runs == 0) throw std::invalid_argument("max concurrent runs must be positive");
  impl_->recover();
  impl_->server.new_task_queue = [] { return new httplib::ThreadPool(32); };
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_->shutting_down.exchange(true)) return;
  impl_->server.stop();
  std::vector<std::shared_ptr<RunHandle>> runs;
  {
    std::lock_guard lock(impl_->registry_mu);
    runs = impl_->runs;
  }
  for (auto& r : runs) r->request_stop();
  for (auto& r : runs) r->join();
}

std::shared_ptr<RunHandle> Service::find(const std::string& run_id) const { return impl_->find(run_id); }

}  // namespace antijam::service
