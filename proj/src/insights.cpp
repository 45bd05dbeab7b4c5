#include "antijam/insights.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <stdexcept>

namespace antijam::insights {

namespace {

struct Stats {
  double min = 0.0;
  double max = 0.0;
  double avg = 0.0;
};

template <typename Get>
Stats stats_of(const std::vector<EpisodeRecord>& records, Get get) {
  Stats s{get(records.front()), get(records.front()), 0.0};
  double sum = 0.0;
  for (const auto& r : records) {
    const double v = get(r);
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
  }
  s.avg = sum / static_cast<double>(records.size());
  return s;
}

}  // namespace

TrainingSummary summarize(const RunLog& log) {
  if (log.records.empty()) throw std::invalid_argument("cannot summarize an empty run log");
  const auto rewards = stats_of(log.records, [](const EpisodeRecord& r) { return r.episode_return; });
  const auto rolling = stats_of(log.records, [](const EpisodeRecord& r) { return r.rolling_average; });
  TrainingSummary s;
  s.episode_count = log.records.size();
  s.reward_min = round2(rewards.min);
  s.reward_max = round2(rewards.max);
  s.reward_avg = round2(rewards.avg);
  s.rolling_min = round2(rolling.min);
  s.rolling_max = round2(rolling.max);
  s.rolling_avg = round2(rolling.avg);
  s.epsilon_start = round2(log.records.front().epsilon);
  s.epsilon_end = round2(log.records.back().epsilon);
  s.solved_threshold = round2(log.config.solved_threshold);
  return s;
}

std::string render_prompt(const TrainingSummary& s) {
  return "The graph represents training rewards over " + std::to_string(s.episode_count) +
         " episodes. The actual rewards range from " + format_fixed2(s.reward_min) + " to " +
         format_fixed2(s.reward_max) + " with an average of " + format_fixed2(s.reward_avg) +
         ". The rolling average values range from " + format_fixed2(s.rolling_min) + " to " +
         format_fixed2(s.rolling_max) + " with an average of " + format_fixed2(s.rolling_avg) +
         ". The epsilon values decrease from " + format_fixed2(s.epsilon_start) + " to " +
         format_fixed2(s.epsilon_end) + " over the episodes. The solved threshold is set at " +
         format_fixed2(s.solved_threshold) + ".";
}

std::optional<TrainingSummary> parse_prompt(const std::string& prompt) {
  static const std::string num = R"((-?\d+\.\d{2}))";
  static const std::regex pattern(
      R"(The graph represents training rewards over (\d+) episodes\. The actual rewards range from )" + num +
      " to " + num + " with an average of " + num + R"(\. The rolling average values range from )" + num +
      " to " + num + " with an average of " + num + R"(\. The epsilon values decrease from )" + num +
      " to " + num + R"( over the episodes\. The solved threshold is set at )" + num + R"(\.)");
  std::smatch m;
  if (!std::regex_match(prompt, m, pattern)) return std::nullopt;
  TrainingSummary s;
  s.episode_count = std::stoul(m[1].str());
  double* fields[] = {&s.reward_min, &s.reward_max, &s.reward_avg, &s.rolling_min, &s.rolling_max,
                      &s.rolling_avg, &s.epsilon_start, &s.epsilon_end, &s.solved_threshold};
  for (std::size_t i = 0; i < std::size(fields); ++i) *fields[i] = std::stod(m[i + 2].str());
  return s;
}

std::string fallback_narrative(const TrainingSummary& s) {
  const bool solved = s.rolling_avg >= s.solved_threshold;
  std::string text = "Over " + std::to_string(s.episode_count) + " training episodes the episode return ranged from " +
                     format_fixed2(s.reward_min) + " to " + format_fixed2(s.reward_max) + " with an average of " +
                     format_fixed2(s.reward_avg) + ". The rolling average moved between " +
                     format_fixed2(s.rolling_min) + " and " + format_fixed2(s.rolling_max) +
                     " and averaged " + format_fixed2(s.rolling_avg) +
                     ". Exploration decreased from epsilon " + format_fixed2(s.epsilon_start) + " to " +
                     format_fixed2(s.epsilon_end) + ", so later episodes mostly reflect the learned policy.";
  if (solved) {
    text += " Verdict: solved. The average rolling return of " + format_fixed2(s.rolling_avg) +
            " meets the threshold of " + format_fixed2(s.solved_threshold) +
            ", so the agent reliably avoids the jammed channel.";
  } else {
    text += " Verdict: below solved threshold. The average rolling return of " + format_fixed2(s.rolling_avg) +
            " is " + format_fixed2(s.solved_threshold - s.rolling_avg) + " short of the threshold of " +
            format_fixed2(s.solved_threshold) + ".";
    if (s.reward_max >= s.solved_threshold) {
      text += " Individual episodes already reach the threshold, which points to a policy that is close but not yet stable.";
    } else {
      text += " The best episode (" + format_fixed2(s.reward_max) + ") is still below the threshold.";
    }
    text += " Consider training for more episodes, slowing the epsilon decay, or adjusting the learning rate.";
  }
  if (s.reward_max - s.reward_min > 0.25 * std::max(1.0, s.solved_threshold)) {
    text += " Returns vary widely between episodes, which is typical while exploration is still high.";
  }
  return text;
}

std::string to_string(InsightSource source) { return source == InsightSource::llm ? "llm" : "fallback"; }

InsightReport generate_report(const RunLog& log, const std::optional<LlmEndpointConfig>& llm) {
  const TrainingSummary summary = summarize(log);
  InsightReport report;
  report.run_id = log.run_id;
  report.prompt = render_prompt(summary);
  if (llm) {
    try {
      std::string narrative = request_insight(report.prompt, *llm);
      if (narrative.empty()) throw LlmResponseError("LLM returned an empty completion");
      report.narrative = std::move(narrative);
      report.source = InsightSource::llm;
      report.model_name = llm->model_name;
    } catch (const std::exception& e) {
      report.warning = std::string("LLM unavailable, used offline summary: ") + e.what();
    }
  }
  if (report.source == InsightSource::fallback) report.narrative = fallback_narrative(summary);
  report.generated_at = utc_timestamp_now();
  return report;
}

nlohmann::json to_json(const TrainingSummary& s) {
  return {
      {"episode_count", s.episode_count}, {"reward_min", s.reward_min},     {"reward_max", s.reward_max},
      {"reward_avg", s.reward_avg},       {"rolling_min", s.rolling_min},   {"rolling_max", s.rolling_max},
      {"rolling_avg", s.rolling_avg},     {"epsilon_start", s.epsilon_start}, {"epsilon_end", s.epsilon_end},
      {"solved_threshold", s.solved_threshold},
  };
}

nlohmann::json to_json(const InsightReport& r) {
  nlohmann::json j = {
      {"run_id", r.run_id},
      {"prompt", r.prompt},
      {"narrative", r.narrative},
      {"source", to_string(r.source)},
      {"model_name", r.model_name ? nlohmann::json(*r.model_name) : nlohmann::json(nullptr)},
      {"generated_at", r.generated_at},
  };
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

void save_report(const InsightReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report " + path.string());
  out << to_json(r).dump(2) << '\n';
  if (!out.flush()) throw std::runtime_error("failed writing report " + path.string());
}

}  // namespace antijam::insights
