#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "antijam/error.hpp"
#include "antijam/keyvalue.hpp"
#include <json.hpp>

namespace antijam::insights {

/// OpenAI-style chat completion endpoint. The key is read from the environment
/// variable named by `api_key_env` at request time and is never stored.
struct LlmEndpointConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model_name;
  std::string api_key_env;  // empty: send no Authorization header
  int timeout_ms = 30000;
  int max_tokens = 512;
  double temperature = 0.2;

  std::vector<FieldError> check() const;
  void validate() const;
};

LlmEndpointConfig llm_config_from(KeyValues kv);
LlmEndpointConfig load_llm_config(const std::filesystem::path& path);

class LlmError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Missing key or invalid endpoint settings; raised before any network traffic.
class LlmConfigError : public LlmError {
  using LlmError::LlmError;
};

/// Connection failure, timeout, or non-200 status.
class LlmTransportError : public LlmError {
 public:
  LlmTransportError(const std::string& what, int status) : LlmError(what), status_(status) {}
  /// HTTP status, or 0 when no response arrived.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// A 200 response whose body holds no completion text.
class LlmResponseError : public LlmError {
  using LlmError::LlmError;
};

extern const char* const kSystemPreamble;

nlohmann::json build_completion_request(const std::string& prompt, const LlmEndpointConfig& cfg);
/// choices[0].message.content, or choices[0].text for plain completion servers.
std::string extract_completion_text(const nlohmann::json& response);

/// Single-turn completion; one retry on connection errors, 429 and 5xx.
std::string request_insight(const std::string& prompt, const LlmEndpointConfig& cfg);

/// Replaces every occurrence of `secret` with "***".
std::string scrub(std::string text, const std::string& secret);

}  // namespace antijam::insights
