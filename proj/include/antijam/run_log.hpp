#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "antijam/config.hpp"

namespace antijam {

/// One point of the training curve. Reals are held at two decimals, exactly as persisted.
struct EpisodeRecord {
  std::size_t index = 0;
  double episode_return = 0.0;
  double rolling_average = 0.0;
  double epsilon = 0.0;
  std::size_t steps = 0;
  std::size_t jam_hits = 0;
  std::size_t switches = 0;
  std::uint64_t wall_time_ms = 0;

  bool operator==(const EpisodeRecord&) const = default;
};

enum class RunStatus { running, completed, solved, stopped, failed };

std::string to_string(RunStatus status);
RunStatus run_status_from_string(std::string_view text);
inline bool is_terminal(RunStatus s) { return s != RunStatus::running; }

struct RunLog {
  std::string run_id;
  TrainConfig config;
  std::vector<EpisodeRecord> records;
  RunStatus status = RunStatus::running;
  std::string created_at;
  /// Cause recorded for status=failed.
  std::string failure;

  bool operator==(const RunLog& other) const;
};

/// `index,return,rolling_average,epsilon,steps,jam_hits,switches,wall_time_ms`
std::string format_record_line(const EpisodeRecord& record);
/// Throws ParseError carrying `line_no`.
EpisodeRecord parse_record_line(std::string_view line, std::size_t line_no);

std::string format_header_line(const RunLog& log);

// File layout: header line (config key=value pairs sorted by key, plus run.id and
// run.created_at), one record line per episode, and a final `status=...` line once
// the run has ended. A file without the status line belongs to a run in progress.
std::string serialize_run_log(const RunLog& log);
RunLog parse_run_log(std::string_view text);
void save_run_log(const RunLog& log, const std::filesystem::path& path);
RunLog load_run_log(const std::filesystem::path& path);

/// Append-only writer; every write is flushed and fsynced so the file always ends
/// at an episode boundary.
class RunLogWriter {
 public:
  RunLogWriter(const std::filesystem::path& path, const RunLog& header);
  ~RunLogWriter();
  RunLogWriter(const RunLogWriter&) = delete;
  RunLogWriter& operator=(const RunLogWriter&) = delete;

  void append(const EpisodeRecord& record);
  void finish(RunStatus status, const std::string& failure = {});

 private:
  void write_line(const std::string& line);

  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

std::string utc_timestamp_now();

}  // namespace antijam
