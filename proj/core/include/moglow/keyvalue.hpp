#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moglow/tensor.hpp"

namespace moglow {

/// Shortest decimal text that parses back to the same double.
std::string format_real(Real v);
/// Strict full-token parse; std::nullopt on any trailing garbage.
std::optional<Real> parse_real(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

/// Ordered `key = value` lines. Blank lines and `#` comments are ignored on
/// parse; keys are unique.
class KeyValue {
 public:
  static KeyValue parse(std::string_view text);
  std::string to_text() const;

  void set(const std::string& key, const std::string& value);
  void set_real(const std::string& key, Real value);
  void set_int(const std::string& key, std::int64_t value);
  void set_reals(const std::string& key, std::span<const Real> values);

  bool contains(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  /// The typed getters throw ConfigError naming the key and expected type.
  std::string require(const std::string& key) const;
  Real require_real(const std::string& key) const;
  std::int64_t require_int(const std::string& key) const;
  std::vector<Real> require_reals(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  void merge(const KeyValue& other);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace moglow
