#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace antijam {

/// Invalid configuration value. `field()` is the config key that was rejected.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Malformed persisted data (run logs, checkpoints, parameter files).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

  /// 1-based line number of the first offending line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct FieldError {
  std::string field;
  std::string message;
};

}  // namespace antijam
