#include "moglow/control_profiles.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "moglow/error.hpp"
#include "moglow/keyvalue.hpp"
#include "moglow/motion.hpp"

namespace moglow::motion {

namespace {

struct Rate {
  Real forward;
  Real lateral;
  Real rotation;
};

Rate rate_at(const std::string& name, Real time) {
  if (name == "still") return {0.0, 0.0, 0.0};
  if (name == "straight") return {100.0, 0.0, 0.0};
  if (name == "turn") return {80.0, 0.0, 0.5};
  if (name == "stop") return std::fmod(time, 10.0) < 5.0 ? Rate{100.0, 0.0, 0.0} : Rate{};
  if (name == "mixed") {
    switch (static_cast<int>(std::floor(time / 6.0)) % 5) {
      case 0: return {100.0, 0.0, 0.0};
      case 1: return {70.0, 0.0, -0.6};
      case 2: return {0.0, 0.0, 0.0};
      case 3: return {0.0, 30.0, 0.0};
      default: return {70.0, 0.0, 0.6};
    }
  }
  throw ContractError("unknown control profile '" + name + "'");
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? std::string() : field.substr(a, b - a + 1));
  }
  return out;
}

}  // namespace

const std::vector<std::string>& synthetic_control_names() {
  static const std::vector<std::string> names{"still", "straight", "turn", "stop", "mixed"};
  return names;
}

Tensor synthetic_control(const std::string& name, Real seconds, Real fps) {
  if (!(fps > 0.0) || !(seconds > 0.0)) throw ContractError("seconds and fps must be positive");
  const auto frames = static_cast<std::size_t>(std::llround(seconds * fps));
  Tensor out = Tensor::zeros(frames, kControlDims);
  for (std::size_t t = 0; t < frames; ++t) {
    const Rate r = rate_at(name, static_cast<Real>(t) / fps);
    set_control(out, t, {r.forward / fps, r.lateral / fps, r.rotation / fps});
  }
  return out;
}

Tensor parse_control_csv(const std::string& text, Real fps) {
  if (!(fps > 0.0)) throw ContractError("fps must be positive");
  std::vector<Real> values;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  Real last_t = -std::numeric_limits<Real>::infinity();
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 4) throw ParseError("expected 4 fields (t, forward, lateral, rotation)", number);
    std::optional<Real> parsed[4];
    for (int i = 0; i < 4; ++i) parsed[i] = parse_real(fields[i]);
    if (!parsed[0]) {
      if (values.empty() && number == 1) continue;  // header
      throw ParseError("field 't' is not a number", number);
    }
    for (int i = 0; i < 4; ++i) {
      if (!parsed[i] || !std::isfinite(*parsed[i])) {
        throw ParseError("field " + std::to_string(i + 1) + " is not a finite number", number);
      }
    }
    if (*parsed[0] <= last_t) throw ParseError("time column must increase", number);
    last_t = *parsed[0];
    values.insert(values.end(), {*parsed[1] / fps, *parsed[2] / fps, *parsed[3] / fps});
  }
  if (values.empty()) throw ParseError("control file has no rows");
  const std::size_t rows = values.size() / kControlDims;
  return Tensor::matrix(rows, kControlDims, std::move(values));
}

}  // namespace moglow::motion
