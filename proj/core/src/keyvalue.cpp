#include "moglow/keyvalue.hpp"

#include <charconv>
#include <cmath>

#include "moglow/error.hpp"

namespace moglow {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string format_real(Real v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<Real> parse_real(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  Real v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  text = trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return v;
}

KeyValue KeyValue::parse(std::string_view text) {
  KeyValue kv;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (kv.contains(key)) throw ParseError("duplicate key '" + key + "'", line_no);
    kv.entries_.emplace_back(key, std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

std::string KeyValue::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void KeyValue::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void KeyValue::set_real(const std::string& key, Real value) { set(key, format_real(value)); }
void KeyValue::set_int(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }

void KeyValue::set_reals(const std::string& key, std::span<const Real> values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ' ';
    s += format_real(values[i]);
  }
  set(key, s);
}

bool KeyValue::contains(const std::string& key) const { return get(key).has_value(); }

std::optional<std::string> KeyValue::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string KeyValue::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw ConfigError("missing key '" + key + "'");
  return *v;
}

Real KeyValue::require_real(const std::string& key) const {
  const std::string s = require(key);
  auto v = parse_real(s);
  if (!v) throw ConfigError("key '" + key + "' expects a number, got '" + s + "'");
  return *v;
}

std::int64_t KeyValue::require_int(const std::string& key) const {
  const std::string s = require(key);
  auto v = parse_int(s);
  if (!v) throw ConfigError("key '" + key + "' expects an integer, got '" + s + "'");
  return *v;
}

std::vector<Real> KeyValue::require_reals(const std::string& key) const {
  const std::string s = require(key);
  std::vector<Real> out;
  std::string_view rest = s;
  while (true) {
    rest = trim(rest);
    if (rest.empty()) break;
    const std::size_t sp = rest.find(' ');
    const std::string_view tok = rest.substr(0, sp);
    auto v = parse_real(tok);
    if (!v) throw ConfigError("key '" + key + "' expects numbers, got '" + std::string(tok) + "'");
    out.push_back(*v);
    rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp);
  }
  return out;
}

void KeyValue::merge(const KeyValue& other) {
  for (const auto& [k, v] : other.entries_) set(k, v);
}

}  // namespace moglow
