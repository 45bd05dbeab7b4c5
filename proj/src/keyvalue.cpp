#include "antijam/keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "antijam/error.hpp"
#include "antijam/random.hpp"

namespace antijam {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool needs_escape(char c) {
  return c == '%' || c == ' ' || static_cast<unsigned char>(c) < 0x20 || c == 0x7f;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng rng_from_state(const std::string& state) {
  std::istringstream in(state);
  Rng rng;
  in >> rng;
  if (in.fail()) throw std::invalid_argument("malformed generator state");
  return rng;
}

KeyValues parse_key_value_text(std::string_view text, const std::string& origin) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ConfigError(origin, "line " + std::to_string(line_no) + " is not key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    if (kv.contains(key)) throw ConfigError(key, "duplicate key in " + origin);
    kv.emplace(std::move(key), std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValues read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_value_text(buf.str(), path.string());
}

std::string escape_value(std::string_view raw) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (needs_escape(c)) {
      const auto u = static_cast<unsigned char>(c);
      out += '%';
      out += kHex[u >> 4];
      out += kHex[u & 0xf];
    } else {
      out += c;
    }
  }
  return out;
}

std::string unescape_value(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] == '%' && i + 2 < escaped.size()) {
      const int hi = hex_value(escaped[i + 1]);
      const int lo = hex_value(escaped[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
        continue;
      }
    }
    if (escaped[i] == '%') throw std::invalid_argument("bad percent escape");
    out += escaped[i];
  }
  return out;
}

std::string join_key_values(const KeyValues& kv) {
  std::string line;
  for (const auto& [key, value] : kv) {
    if (!line.empty()) line += ' ';
    line += key;
    line += '=';
    line += escape_value(value);
  }
  return line;
}

KeyValues split_key_values(std::string_view line) {
  KeyValues kv;
  while (!line.empty()) {
    const auto sp = line.find(' ');
    const std::string_view token = line.substr(0, sp);
    line = sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
    if (token.empty()) continue;
    const auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw std::invalid_argument("token '" + std::string(token) + "' is not key=value");
    }
    kv.insert_or_assign(std::string(token.substr(0, eq)), unescape_value(token.substr(eq + 1)));
  }
  return kv;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double round2(double value) {
  const double scaled = std::fabs(value) * 100.0;
  const double whole = std::floor(scaled);
  // The tolerance absorbs binary representation error for decimal ties such as 77.265.
  const double magnitude = (scaled - whole + 1e-9 >= 0.5) ? whole + 1.0 : whole;
  if (magnitude == 0.0) return 0.0;
  return std::copysign(magnitude, value) / 100.0;
}

std::string format_fixed2(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", round2(value));
  std::string out(buf);
  if (out == "-0.00") out = "0.00";
  return out;
}

double parse_double(const std::string& key, std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError(key, "expected a finite number, got '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(const std::string& key, std::string_view text) {
  text = trim(text);
  std::int64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError(key, "expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t parse_uint(const std::string& key, std::string_view text) {
  text = trim(text);
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + std::string(text) + "'");
}

std::optional<std::string> take(KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  std::string value = std::move(it->second);
  kv.erase(it);
  return value;
}

}  // namespace antijam
