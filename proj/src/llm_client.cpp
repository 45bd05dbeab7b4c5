#include "antijam/llm_client.hpp"

#include <cstdlib>

#include <httplib.h>

namespace antijam::insights {

const char* const kSystemPreamble =
    "You are a network operations analyst. Explain the following DRL training summary for a "
    "human operator, noting strengths and potential refinements.";

std::vector<FieldError> LlmEndpointConfig::check() const {
  std::vector<FieldError> errors;
  if (!base_url.starts_with("http://") && !base_url.starts_with("https://")) {
    errors.push_back({"base_url", "must start with http:// or https://"});
  }
  if (path.empty() || path.front() != '/') errors.push_back({"path", "must start with /"});
  if (model_name.empty()) errors.push_back({"model_name", "must not be empty"});
  if (timeout_ms <= 0) errors.push_back({"timeout_ms", "must be positive"});
  if (max_tokens <= 0) errors.push_back({"max_tokens", "must be positive"});
  if (!(temperature >= 0.0)) errors.push_back({"temperature", "must be non-negative"});
  return errors;
}

void LlmEndpointConfig::validate() const {
  const auto errors = check();
  if (!errors.empty()) throw ConfigError(errors.front().field, errors.front().message);
}

LlmEndpointConfig llm_config_from(KeyValues kv) {
  LlmEndpointConfig c;
  if (auto v = take(kv, "base_url")) c.base_url = *v;
  if (auto v = take(kv, "path")) c.path = *v;
  if (auto v = take(kv, "model_name")) c.model_name = *v;
  if (auto v = take(kv, "api_key_env")) c.api_key_env = *v;
  if (auto v = take(kv, "timeout_ms")) c.timeout_ms = static_cast<int>(parse_int("timeout_ms", *v));
  if (auto v = take(kv, "max_tokens")) c.max_tokens = static_cast<int>(parse_int("max_tokens", *v));
  if (auto v = take(kv, "temperature")) c.temperature = parse_double("temperature", *v);
  if (!kv.empty()) throw ConfigError(kv.begin()->first, "unknown LLM config key");
  c.validate();
  return c;
}

LlmEndpointConfig load_llm_config(const std::filesystem::path& path) {
  return llm_config_from(read_key_value_file(path));
}

std::string scrub(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos + 3)) {
    text.replace(pos, secret.size(), "***");
  }
  return text;
}

nlohmann::json build_completion_request(const std::string& prompt, const LlmEndpointConfig& cfg) {
  return {
      {"model", cfg.model_name},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", kSystemPreamble}},
                              {{"role", "user"}, {"content", prompt}}})},
      {"max_tokens", cfg.max_tokens},
      {"temperature", cfg.temperature},
  };
}

std::string extract_completion_text(const nlohmann::json& response) {
  const auto choices = response.find("choices");
  if (choices == response.end() || !choices->is_array() || choices->empty()) {
    throw LlmResponseError("completion response has no choices");
  }
  const auto& first = (*choices)[0];
  if (first.contains("message") && first["message"].contains("content") && first["message"]["content"].is_string()) {
    return first["message"]["content"].get<std::string>();
  }
  if (first.contains("text") && first["text"].is_string()) return first["text"].get<std::string>();
  throw LlmResponseError("completion response has no text");
}

std::string request_insight(const std::string& prompt, const LlmEndpointConfig& cfg) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw LlmConfigError(std::string("LLM endpoint config: ") + e.what());
  }
  std::string key;
  if (!cfg.api_key_env.empty()) {
    const char* value = std::getenv(cfg.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
      throw LlmConfigError("environment variable " + cfg.api_key_env + " holding the API key is not set");
    }
    key = value;
  }

  httplib::Client client(cfg.base_url);
  if (!client.is_valid()) throw LlmConfigError("unsupported LLM endpoint URL " + cfg.base_url);
  const time_t sec = cfg.timeout_ms / 1000;
  const time_t usec = static_cast<time_t>(cfg.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  httplib::Headers headers;
  if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
  const std::string body = build_completion_request(prompt, cfg).dump();

  std::string last_error;
  int last_status = 0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto res = client.Post(cfg.path, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "LLM request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) throw LlmResponseError("LLM response is not JSON");
      return extract_completion_text(parsed);
    }
    last_status = res->status;
    last_error = "LLM endpoint returned HTTP " + std::to_string(res->status) + ": " +
                 scrub(res->body, key).substr(0, 200);
    if (res->status != 429 && res->status < 500) break;
  }
  throw LlmTransportError(scrub(last_error, key), last_status);
}

}  // namespace antijam::insights
