#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "antijam/llm_client.hpp"
#include "antijam/run_log.hpp"
#include <json.hpp>

namespace antijam::insights {

/// Statistics handed to the prompt template; every real is rounded to two decimals.
struct TrainingSummary {
  std::size_t episode_count = 0;
  double reward_min = 0.0;
  double reward_max = 0.0;
  double reward_avg = 0.0;
  double rolling_min = 0.0;
  double rolling_max = 0.0;
  double rolling_avg = 0.0;
  double epsilon_start = 0.0;
  double epsilon_end = 0.0;
  double solved_threshold = 0.0;

  bool operator==(const TrainingSummary&) const = default;
};

TrainingSummary summarize(const RunLog& log);

std::string render_prompt(const TrainingSummary& s);
/// Inverse of render_prompt; nullopt when `prompt` does not follow the template.
std::optional<TrainingSummary> parse_prompt(const std::string& prompt);

/// Deterministic narrative used when no LLM is configured or reachable.
std::string fallback_narrative(const TrainingSummary& s);

enum class InsightSource { llm, fallback };
std::string to_string(InsightSource source);

struct InsightReport {
  std::string run_id;
  std::string prompt;
  std::string narrative;
  InsightSource source = InsightSource::fallback;
  std::optional<std::string> model_name;
  std::string generated_at;
  /// Why the LLM path was abandoned, when it was.
  std::string warning;
};

/// summarize -> render_prompt -> LLM (when configured) or fallback. LLM failures
/// degrade to the fallback; only an empty log is an error.
InsightReport generate_report(const RunLog& log, const std::optional<LlmEndpointConfig>& llm);

nlohmann::json to_json(const TrainingSummary& s);
nlohmann::json to_json(const InsightReport& r);
void save_report(const InsightReport& r, const std::filesystem::path& path);

}  // namespace antijam::insights
