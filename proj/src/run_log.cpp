#include "antijam/run_log.hpp"

#include <unistd.h>

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace antijam {

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line_no, const char* name) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ParseError(line_no, std::string("malformed ") + name + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::running: return "running";
    case RunStatus::completed: return "completed";
    case RunStatus::solved: return "solved";
    case RunStatus::stopped: return "stopped";
    case RunStatus::failed: return "failed";
  }
  return "failed";
}

RunStatus run_status_from_string(std::string_view text) {
  if (text == "running") return RunStatus::running;
  if (text == "completed") return RunStatus::completed;
  if (text == "solved") return RunStatus::solved;
  if (text == "stopped") return RunStatus::stopped;
  if (text == "failed") return RunStatus::failed;
  throw std::invalid_argument("unknown run status '" + std::string(text) + "'");
}

bool RunLog::operator==(const RunLog& other) const {
  return run_id == other.run_id && to_key_values(config) == to_key_values(other.config) &&
         records == other.records && status == other.status && created_at == other.created_at &&
         failure == other.failure;
}

std::string format_record_line(const EpisodeRecord& r) {
  std::string line;
  line += std::to_string(r.index);
  line += ',' + format_fixed2(r.episode_return);
  line += ',' + format_fixed2(r.rolling_average);
  line += ',' + format_fixed2(r.epsilon);
  line += ',' + std::to_string(r.steps);
  line += ',' + std::to_string(r.jam_hits);
  line += ',' + std::to_string(r.switches);
  line += ',' + std::to_string(r.wall_time_ms);
  return line;
}

EpisodeRecord parse_record_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto comma = line.find(',');
    fields.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line = line.substr(comma + 1);
  }
  if (fields.size() != 8) {
    throw ParseError(line_no, "expected 8 comma-separated fields, got " + std::to_string(fields.size()));
  }
  EpisodeRecord r;
  r.index = parse_field<std::size_t>(fields[0], line_no, "index");
  r.episode_return = parse_field<double>(fields[1], line_no, "return");
  r.rolling_average = parse_field<double>(fields[2], line_no, "rolling_average");
  r.epsilon = parse_field<double>(fields[3], line_no, "epsilon");
  r.steps = parse_field<std::size_t>(fields[4], line_no, "steps");
  r.jam_hits = parse_field<std::size_t>(fields[5], line_no, "jam_hits");
  r.switches = parse_field<std::size_t>(fields[6], line_no, "switches");
  r.wall_time_ms = parse_field<std::uint64_t>(fields[7], line_no, "wall_time_ms");
  return r;
}

std::string format_header_line(const RunLog& log) {
  KeyValues kv = to_key_values(log.config);
  kv["run.id"] = log.run_id;
  kv["run.created_at"] = log.created_at;
  return join_key_values(kv);
}

namespace {

// status= leads the line so readers can tell it from a record.
std::string status_line(RunStatus status, const std::string& failure) {
  std::string line = "status=" + to_string(status);
  if (!failure.empty()) line += " cause=" + escape_value(failure);
  return line;
}

}  // namespace

std::string serialize_run_log(const RunLog& log) {
  std::string out = format_header_line(log) + '\n';
  for (const auto& r : log.records) out += format_record_line(r) + '\n';
  if (is_terminal(log.status)) out += status_line(log.status, log.failure) + '\n';
  return out;
}

RunLog parse_run_log(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
  }
  if (lines.empty() || lines[0].empty()) throw ParseError(1, "missing header line");

  RunLog log;
  try {
    KeyValues kv = split_key_values(lines[0]);
    log.run_id = take(kv, "run.id").value_or("");
    log.created_at = take(kv, "run.created_at").value_or("");
    log.config = train_config_from(std::move(kv));
  } catch (const std::exception& e) {
    throw ParseError(1, std::string("bad header: ") + e.what());
  }

  bool ended = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = lines[i];
    if (ended) throw ParseError(line_no, "content after the status line");
    if (line.starts_with("status=")) {
      try {
        KeyValues kv = split_key_values(line);
        log.status = run_status_from_string(kv.at("status"));
        log.failure = kv.contains("cause") ? kv.at("cause") : "";
      } catch (const std::exception& e) {
        throw ParseError(line_no, std::string("bad status line: ") + e.what());
      }
      if (log.status == RunStatus::running) throw ParseError(line_no, "status line cannot say running");
      ended = true;
      continue;
    }
    EpisodeRecord r = parse_record_line(line, line_no);
    if (r.index != log.records.size()) {
      throw ParseError(line_no, "record index " + std::to_string(r.index) + " is not contiguous");
    }
    log.records.push_back(r);
  }
  return log;
}

void save_run_log(const RunLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write run log " + path.string());
  out << serialize_run_log(log);
  if (!out.flush()) throw std::runtime_error("failed writing run log " + path.string());
}

RunLog load_run_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open run log " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_log(buf.str());
}

RunLogWriter::RunLogWriter(const std::filesystem::path& path, const RunLog& header) : path_(path) {
  file_ = std::fopen(path.c_str(), "wb");
  if (file_ == nullptr) throw std::runtime_error("cannot create run log " + path.string());
  write_line(format_header_line(header));
  for (const auto& r : header.records) write_line(format_record_line(r));
}

RunLogWriter::~RunLogWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

void RunLogWriter::write_line(const std::string& line) {
  if (file_ == nullptr) throw std::runtime_error("run log " + path_.string() + " is closed");
  const std::string data = line + '\n';
  if (std::fwrite(data.data(), 1, data.size(), file_) != data.size() || std::fflush(file_) != 0 ||
      ::fsync(::fileno(file_)) != 0) {
    throw std::runtime_error("write to run log " + path_.string() + " failed");
  }
}

void RunLogWriter::append(const EpisodeRecord& record) { write_line(format_record_line(record)); }

void RunLogWriter::finish(RunStatus status, const std::string& failure) {
  write_line(status_line(status, failure));
  std::fclose(file_);
  file_ = nullptr;
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace antijam
