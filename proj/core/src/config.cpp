#include "moglow/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "moglow/error.hpp"

namespace moglow {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (steps < 1) throw ConfigError("train_steps must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (warmup < 1) throw ConfigError("warmup must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate <= 1.0)) throw ConfigError("dropout_rate must lie in [0, 1]");
  if (window < 2) throw ConfigError("window must be at least 2 frames");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("overlap must lie in [0, 1)");
  if (precision != "f64") throw ConfigError("precision '" + precision + "' unsupported (this build trains in f64)");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be >= 0");
  if (eval_every < 1) throw ConfigError("eval_every must be positive");
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) {
    throw ConfigError("heldout_fraction must lie in [0, 1)");
  }
}

Real TrainConfig::lr_at(std::uint64_t step) const {
  if (schedule == Schedule::constant) return learning_rate;
  const Real s = static_cast<Real>(std::max<std::uint64_t>(step, 1));
  const Real w = static_cast<Real>(warmup);
  return learning_rate * std::min(s / w, std::sqrt(w / s));
}

std::string schedule_name(Schedule s) { return s == Schedule::noam ? "noam" : "constant"; }

RunProfile named_profile(const std::string& name, std::size_t pose_dims, std::size_t control_dims) {
  RunProfile p;
  p.name = name;
  if (name == "desk") {
    p.model = ModelConfig::desk(pose_dims, control_dims);
  } else if (name == "paper") {
    p.model = ModelConfig::paper(pose_dims, control_dims);
    p.train.batch_size = 100;
    p.train.steps = 80000;
    p.train.learning_rate = 1e-3;
    p.train.schedule = Schedule::noam;
    p.train.warmup = 1000;
    p.train.window = 80;
    p.train.eval_every = 1000;
  } else {
    throw ConfigError("unknown profile '" + name + "' (expected desk or paper)");
  }
  p.train.dropout_rate = p.model.dropout_rate;
  return p;
}

namespace {

struct KeySpec {
  std::function<void(RunProfile&, const std::string&)> set;
  std::function<std::string(const RunProfile&)> get;
};

std::size_t to_size(const std::string& key, const std::string& v) {
  auto n = parse_int(v);
  if (!n || *n < 0) throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(*n);
}

Real to_real(const std::string& key, const std::string& v) {
  auto x = parse_real(v);
  if (!x || !std::isfinite(*x)) throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
  return *x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "' expects a boolean (true/false), got '" + v + "'");
}

template <typename T>
KeySpec size_key(T RunProfile::*group, std::size_t T::*field, const std::string& key) {
  return {[=](RunProfile& p, const std::string& v) { (p.*group).*field = to_size(key, v); },
          [=](const RunProfile& p) { return std::to_string((p.*group).*field); }};
}

template <typename T>
KeySpec real_key(T RunProfile::*group, Real T::*field, const std::string& key) {
  return {[=](RunProfile& p, const std::string& v) { (p.*group).*field = to_real(key, v); },
          [=](const RunProfile& p) { return format_real((p.*group).*field); }};
}

const std::vector<std::pair<std::string, KeySpec>>& key_table() {
  static const std::vector<std::pair<std::string, KeySpec>> table = [] {
    std::vector<std::pair<std::string, KeySpec>> t;
    t.emplace_back("flow_steps", size_key(&RunProfile::model, &ModelConfig::steps, "flow_steps"));
    t.emplace_back("history", size_key(&RunProfile::model, &ModelConfig::history, "history"));
    t.emplace_back("hidden", size_key(&RunProfile::model, &ModelConfig::hidden, "hidden"));
    t.emplace_back("scale_floor", real_key(&RunProfile::model, &ModelConfig::scale_floor, "scale_floor"));
    t.emplace_back("batch_size", size_key(&RunProfile::train, &TrainConfig::batch_size, "batch_size"));
    t.emplace_back("train_steps", size_key(&RunProfile::train, &TrainConfig::steps, "train_steps"));
    t.emplace_back("learning_rate",
                   real_key(&RunProfile::train, &TrainConfig::learning_rate, "learning_rate"));
    t.emplace_back("schedule",
                   KeySpec{[](RunProfile& p, const std::string& v) {
                             if (v == "noam") p.train.schedule = Schedule::noam;
                             else if (v == "constant") p.train.schedule = Schedule::constant;
                             else throw ConfigError("key 'schedule' expects noam or constant, got '" + v + "'");
                           },
                           [](const RunProfile& p) { return schedule_name(p.train.schedule); }});
    t.emplace_back("warmup", size_key(&RunProfile::train, &TrainConfig::warmup, "warmup"));
    t.emplace_back("dropout_rate",
                   KeySpec{[](RunProfile& p, const std::string& v) {
                             p.train.dropout_rate = to_real("dropout_rate", v);
                             p.model.dropout_rate = p.train.dropout_rate;
                           },
                           [](const RunProfile& p) { return format_real(p.train.dropout_rate); }});
    t.emplace_back("window", size_key(&RunProfile::train, &TrainConfig::window, "window"));
    t.emplace_back("overlap", real_key(&RunProfile::train, &TrainConfig::overlap, "overlap"));
    t.emplace_back("seed", KeySpec{[](RunProfile& p, const std::string& v) {
                                     auto n = parse_int(v);
                                     if (!n || *n < 0) throw ConfigError("key 'seed' expects a non-negative integer, got '" + v + "'");
                                     p.train.seed = static_cast<std::uint64_t>(*n);
                                   },
                                   [](const RunProfile& p) { return std::to_string(p.train.seed); }});
    t.emplace_back("precision", KeySpec{[](RunProfile& p, const std::string& v) { p.train.precision = v; },
                                        [](const RunProfile& p) { return p.train.precision; }});
    t.emplace_back("clip_norm", real_key(&RunProfile::train, &TrainConfig::clip_norm, "clip_norm"));
    t.emplace_back("eval_every", size_key(&RunProfile::train, &TrainConfig::eval_every, "eval_every"));
    t.emplace_back("heldout_fraction",
                   real_key(&RunProfile::train, &TrainConfig::heldout_fraction, "heldout_fraction"));
    t.emplace_back("augment", KeySpec{[](RunProfile& p, const std::string& v) { p.train.augment = to_bool("augment", v); },
                                      [](const RunProfile& p) { return std::string(p.train.augment ? "true" : "false"); }});
    return t;
  }();
  return table;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, spec] : key_table()) k.push_back(name);
    return k;
  }();
  return keys;
}

std::string suggest_key(std::string_view unknown) {
  std::string best;
  std::size_t best_d = std::max<std::size_t>(3, unknown.size() / 3) + 1;
  for (const std::string& k : config_keys()) {
    const std::size_t d = edit_distance(unknown, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

void apply_config(RunProfile& profile, const KeyValue& settings) {
  for (const auto& [key, value] : settings.entries()) {
    const auto& table = key_table();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
    if (it == table.end()) {
      const std::string hint = suggest_key(key);
      throw ConfigError("unknown config key '" + key + "'" +
                        (hint.empty() ? std::string() : " (did you mean '" + hint + "'?)"));
    }
    it->second.set(profile, value);
  }
  profile.train.validate();
  try {
    profile.model.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

RunProfile resolve_config(const std::string& profile_name, std::size_t pose_dims,
                          std::string_view file_text, const KeyValue& overrides) {
  RunProfile p = named_profile(profile_name, pose_dims);
  KeyValue merged = KeyValue::parse(file_text);
  merged.merge(overrides);
  apply_config(p, merged);
  return p;
}

KeyValue to_keyvalue(const RunProfile& profile) {
  KeyValue kv;
  for (const auto& [key, spec] : key_table()) kv.set(key, spec.get(profile));
  return kv;
}

}  // namespace moglow
