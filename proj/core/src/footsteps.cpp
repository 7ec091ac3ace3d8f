#include "moglow/footsteps.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "moglow/error.hpp"

namespace moglow::eval {

std::vector<FrameRange> detect_steps(std::span<const Real> speed, Real v_tol, std::size_t min_frames) {
  if (!(v_tol >= 0.0)) throw ContractError("speed tolerance must be >= 0");
  std::vector<FrameRange> out;
  std::size_t start = 0;
  bool open = false;
  for (std::size_t t = 0; t <= speed.size(); ++t) {
    const bool slow = t < speed.size() && speed[t] < v_tol;
    if (slow && !open) {
      start = t;
      open = true;
    } else if (!slow && open) {
      if (t - start >= min_frames) out.emplace_back(start, t);
      open = false;
    }
  }
  return out;
}

std::vector<Real> horizontal_speed(const Tensor& world_positions, std::size_t joint, Real fps) {
  const std::size_t frames = world_positions.rows();
  std::vector<Real> out(frames, 0.0);
  if (frames < 2) return out;
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t a = t == 0 ? 0 : t - 1;
    const std::size_t b = t + 1 == frames ? t : t + 1;
    const Real dx = world_positions(b, 3 * joint) - world_positions(a, 3 * joint);
    const Real dz = world_positions(b, 3 * joint + 2) - world_positions(a, 3 * joint + 2);
    out[t] = std::hypot(dx, dz) * fps / static_cast<Real>(b - a);
  }
  return out;
}

Real v95(std::span<const Real> tolerances, std::span<const std::size_t> counts) {
  if (tolerances.size() != counts.size() || counts.empty()) {
    throw ContractError("v95 needs a non-empty curve");
  }
  const std::size_t peak = *std::max_element(counts.begin(), counts.end());
  if (peak == 0) throw UndefinedResultError("no footsteps at any tolerance; v95 undefined");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (static_cast<Real>(counts[i]) >= 0.95 * static_cast<Real>(peak)) return tolerances[i];
  }
  return tolerances.back();
}

DurationStats step_duration_stats(std::span<const FrameRange> steps, Real fps) {
  if (steps.empty()) throw UndefinedResultError("no steps; duration statistics undefined");
  DurationStats s;
  s.count = steps.size();
  Real sum = 0.0;
  for (const FrameRange& r : steps) sum += static_cast<Real>(r.second - r.first) / fps;
  s.mean = sum / static_cast<Real>(steps.size());
  if (steps.size() >= 2) {
    Real var = 0.0;
    for (const FrameRange& r : steps) {
      const Real d = static_cast<Real>(r.second - r.first) / fps - s.mean;
      var += d * d;
    }
    s.stddev = std::sqrt(var / static_cast<Real>(steps.size()));
  }
  return s;
}

FootstepReport footstep_curve(const motion::MotionClip& clip, std::span<const int> feet,
                              const FootstepOptions& options) {
  if (!(options.tol_step > 0.0) || !(options.tol_max >= options.tol_step)) {
    throw ContractError("tolerance grid needs 0 < tol_step <= tol_max");
  }
  if (feet.empty()) throw ContractError("no foot joints given");
  const Tensor world = motion::world_positions(clip);
  std::vector<std::vector<Real>> speeds;
  for (int f : feet) {
    if (f < 0 || static_cast<std::size_t>(f) >= clip.skeleton.joints()) {
      throw ContractError("foot joint index " + std::to_string(f) + " out of range");
    }
    speeds.push_back(horizontal_speed(world, static_cast<std::size_t>(f), clip.fps));
  }
  FootstepReport r;
  const std::size_t points = static_cast<std::size_t>(std::floor(options.tol_max / options.tol_step + 1e-9));
  for (std::size_t i = 1; i <= points; ++i) {
    const Real tol = options.tol_step * static_cast<Real>(i);
    std::size_t count = 0;
    for (const auto& s : speeds) count += detect_steps(s, tol, options.min_frames).size();
    r.tolerances.push_back(tol);
    r.counts.push_back(count);
  }
  r.plateau = *std::max_element(r.counts.begin(), r.counts.end());
  r.v95 = v95(r.tolerances, r.counts);
  std::vector<FrameRange> all;
  for (const auto& s : speeds) {
    r.steps.push_back(detect_steps(s, r.v95, options.min_frames));
    all.insert(all.end(), r.steps.back().begin(), r.steps.back().end());
  }
  r.durations = step_duration_stats(all, clip.fps);
  return r;
}

Real bone_length_rmse(const motion::MotionClip& clip) {
  const motion::Skeleton& s = clip.skeleton;
  Real sq = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < clip.frames(); ++t) {
    for (std::size_t j = 0; j < s.joints(); ++j) {
      const int p = s.parents[j];
      if (p < 0) continue;
      const std::size_t pj = static_cast<std::size_t>(p);
      const Real dx = clip.poses(t, 3 * j) - clip.poses(t, 3 * pj);
      const Real dy = clip.poses(t, 3 * j + 1) - clip.poses(t, 3 * pj + 1);
      const Real dz = clip.poses(t, 3 * j + 2) - clip.poses(t, 3 * pj + 2);
      const Real err = std::sqrt(dx * dx + dy * dy + dz * dz) - s.bone_length(j);
      sq += err * err;
      ++n;
    }
  }
  if (n == 0) throw UndefinedResultError("clip has no bones");
  return std::sqrt(sq / static_cast<Real>(n));
}

Real stillness_metric(const motion::MotionClip& clip) {
  const Tensor world = motion::world_positions(clip);
  const std::size_t frames = clip.frames();
  const std::size_t joints = clip.skeleton.joints();
  if (frames < 2) return 0.0;
  Real sum = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t a = t == 0 ? 0 : t - 1;
    const std::size_t b = t + 1 == frames ? t : t + 1;
    for (std::size_t j = 0; j < joints; ++j) {
      Real sq = 0.0;
      for (int k = 0; k < 3; ++k) {
        const Real d = world(b, 3 * j + k) - world(a, 3 * j + k);
        sq += d * d;
      }
      sum += std::sqrt(sq) * clip.fps / static_cast<Real>(b - a);
    }
  }
  return sum / static_cast<Real>(frames * joints);
}

std::vector<int> resolve_feet(const motion::Skeleton& skeleton, const std::string& spec) {
  std::vector<int> out;
  auto contains = [](const std::string& name, const char* word) {
    return name.find(word) != std::string::npos;
  };
  if (spec == "heels" || spec == "toes") {
    const char* word = spec == "heels" ? "heel" : "toe";
    for (std::size_t j = 0; j < skeleton.joints(); ++j) {
      std::string lower = skeleton.names[j];
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      if (contains(lower, word)) out.push_back(static_cast<int>(j));
    }
  } else {
    std::size_t pos = 0;
    while (pos <= spec.size()) {
      std::size_t end = spec.find(',', pos);
      if (end == std::string::npos) end = spec.size();
      const std::string name = spec.substr(pos, end - pos);
      const int j = skeleton.find(name);
      if (j < 0) throw ContractError("skeleton has no joint named '" + name + "'");
      out.push_back(j);
      pos = end + 1;
    }
  }
  if (out.empty()) throw ContractError("no joints match foot spec '" + spec + "'");
  return out;
}

KeyValue report_keyvalue(const FootstepReport& report, Real bone_rmse, Real stillness) {
  KeyValue kv;
  kv.set_real("tol_step", report.tolerances.front());
  kv.set_real("tol_max", report.tolerances.back());
  kv.set_int("f_est_plateau", static_cast<std::int64_t>(report.plateau));
  kv.set_real("v95", report.v95);
  kv.set_int("steps_at_v95", static_cast<std::int64_t>(report.durations.count));
  kv.set_real("duration_mean", report.durations.mean);
  kv.set("duration_std", report.durations.stddev ? format_real(*report.durations.stddev) : "undefined");
  for (std::size_t f = 0; f < report.steps.size(); ++f) {
    kv.set_int("foot" + std::to_string(f) + ".steps", static_cast<std::int64_t>(report.steps[f].size()));
  }
  kv.set_real("bone_length_rmse", bone_rmse);
  kv.set_real("mean_joint_speed", stillness);
  return kv;
}

std::string curve_csv(const FootstepReport& report) {
  std::string out = "v_tol,f_est\n";
  for (std::size_t i = 0; i < report.tolerances.size(); ++i) {
    out += format_real(report.tolerances[i]) + "," + std::to_string(report.counts[i]) + "\n";
  }
  return out;
}

std::string curve_svg(const FootstepReport& report, const std::string& title) {
  const Real w = 640, h = 400, left = 60, right = 20, top = 40, bottom = 50;
  const Real xmax = report.tolerances.back();
  const Real ymax = std::max<Real>(1.0, static_cast<Real>(report.plateau) * 1.1);
  auto px = [&](Real x) { return left + (w - left - right) * x / xmax; };
  auto py = [&](Real y) { return h - bottom - (h - top - bottom) * y / ymax; };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" + title + "</text>\n";
  s += "<line x1=\"" + format_real(left) + "\" y1=\"" + format_real(h - bottom) + "\" x2=\"" +
       format_real(w - right) + "\" y2=\"" + format_real(h - bottom) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + format_real(left) + "\" y1=\"" + format_real(top) + "\" x2=\"" + format_real(left) +
       "\" y2=\"" + format_real(h - bottom) + "\" stroke=\"black\"/>\n";
  s += "<text x=\"320\" y=\"390\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       "tolerance (cm/s)</text>\n";
  s += "<text x=\"16\" y=\"200\" transform=\"rotate(-90 16 200)\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"12\">footsteps</text>\n";
  s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < report.tolerances.size(); ++i) {
    s += format_real(std::round(px(report.tolerances[i]) * 10) / 10) + "," +
         format_real(std::round(py(static_cast<Real>(report.counts[i])) * 10) / 10) + " ";
  }
  s += "\"/>\n";
  s += "<line x1=\"" + format_real(px(report.v95)) + "\" y1=\"" + format_real(top) + "\" x2=\"" +
       format_real(px(report.v95)) + "\" y2=\"" + format_real(h - bottom) +
       "\" stroke=\"firebrick\" stroke-dasharray=\"4 3\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace moglow::eval
