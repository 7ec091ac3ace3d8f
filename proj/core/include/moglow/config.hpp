#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "moglow/keyvalue.hpp"
#include "moglow/model.hpp"

namespace moglow {

enum class Schedule { constant, noam };

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t steps = 4000;
  Real learning_rate = 1e-3;  // constant rate, or the Noam peak
  Schedule schedule = Schedule::noam;
  std::size_t warmup = 400;
  Real dropout_rate = 0.95;
  std::size_t window = 60;  // frames per training window
  Real overlap = 0.5;
  std::uint64_t seed = 20190101;
  std::string precision = "f64";
  Real clip_norm = 0.0;  // global gradient norm limit, 0 disables
  std::size_t eval_every = 250;
  Real heldout_fraction = 0.1;
  bool augment = true;

  void validate() const;
  Real lr_at(std::uint64_t step) const;
};

/// Model architecture plus optimisation settings under one name.
struct RunProfile {
  std::string name;
  ModelConfig model;
  TrainConfig train;
};

/// "paper" (N = 16, τ = 10, width 512, batch 100, 80k steps, Noam 1k/1e-3)
/// or "desk" (N = 4, τ = 4, width 64). Throws ConfigError otherwise.
RunProfile named_profile(const std::string& name, std::size_t pose_dims,
                         std::size_t control_dims = 3);

/// Every recognised key, in canonical order.
const std::vector<std::string>& config_keys();
/// Closest recognised key by edit distance, empty when nothing is close.
std::string suggest_key(std::string_view unknown);

/// Applies `key = value` settings. Unknown keys and malformed values throw
/// ConfigError naming the key (with a suggestion or the expected type).
void apply_config(RunProfile& profile, const KeyValue& settings);
/// Profile defaults, then the file text, then the flag overrides.
RunProfile resolve_config(const std::string& profile_name, std::size_t pose_dims,
                          std::string_view file_text, const KeyValue& overrides);

/// Canonical dump of every key; round-trips through apply_config.
KeyValue to_keyvalue(const RunProfile& profile);

std::string schedule_name(Schedule s);

}  // namespace moglow
