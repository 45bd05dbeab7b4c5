#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace antijam {

// Flat `key=value` text used by config files, run-log headers and checkpoints.
using KeyValues = std::map<std::string, std::string>;

/// Reads `key=value` lines; blank lines and lines starting with '#' are skipped.
/// Throws ConfigError (field = path) when the file is missing or a line has no '='.
KeyValues read_key_value_file(const std::filesystem::path& path);
KeyValues parse_key_value_text(std::string_view text, const std::string& origin);

/// Single-line form: pairs sorted by key, separated by one space. Values are
/// percent-escaped so they never contain spaces or newlines.
std::string join_key_values(const KeyValues& kv);
KeyValues split_key_values(std::string_view line);

std::string escape_value(std::string_view raw);
std::string unescape_value(std::string_view escaped);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
/// Fixed two-decimal text, rounded half away from zero, never "-0.00".
std::string format_fixed2(double value);
/// Rounds half away from zero to two decimals.
double round2(double value);

// Typed accessors. Each throws ConfigError naming `key` on malformed input.
double parse_double(const std::string& key, std::string_view text);
std::int64_t parse_int(const std::string& key, std::string_view text);
std::uint64_t parse_uint(const std::string& key, std::string_view text);
bool parse_bool(const std::string& key, std::string_view text);

/// Consumes `key` from `kv` if present (so leftovers can be reported as unknown).
std::optional<std::string> take(KeyValues& kv, const std::string& key);

}  // namespace antijam
