#include "moglow/toy_walker.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "moglow/error.hpp"

namespace moglow::motion {

namespace {

constexpr Real kHipHeight = 84.0;
constexpr Real kFootLateral = 10.0;
constexpr Real kSkipDistance = 1.5;  // cm; shorter steps keep the foot planted
constexpr Real kMaxArc = 10.0;
constexpr Real kReachSpeed = 110.0;
constexpr Real kChest = 30.0;
constexpr Real kHead = 25.0;
constexpr Real kStillDistance = 1e-9;  // cm between central-difference neighbours
constexpr Vec3 kKneeOffset{10.0, -46.0, 0.0};
constexpr Vec3 kHeelOffset{0.0, -46.0, 0.0};

enum Joint { hip, chest, head, left_knee, left_heel, right_knee, right_heel };

Real draw(std::mt19937_64& rng) {
  return static_cast<Real>(rng() >> 11) * 0x1.0p-53;
}

Real approach(Real current, Real target, Real max_delta) {
  if (target > current) return std::min(target, current + max_delta);
  return std::max(target, current - max_delta);
}

Real norm3(const Vec3& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

std::vector<ToySegment> random_profile(const ToyWalkerSpec& spec, Real seconds,
                                       std::mt19937_64& rng) {
  std::vector<ToySegment> out;
  Real covered = 0.0;
  while (covered < seconds) {
    ToySegment seg;
    seg.seconds = spec.min_segment + (spec.max_segment - spec.min_segment) * draw(rng);
    const Real kind = draw(rng);
    if (kind < spec.stand_probability) {
      seg.speed = 0.0;
      seg.turn_rate = 0.0;
    } else if (kind < spec.stand_probability + spec.sidestep_probability) {
      const Real side = draw(rng) < 0.5 ? -1.0 : 1.0;
      seg.lateral = side * spec.max_lateral * (0.5 + 0.5 * draw(rng));
    } else {
      seg.speed = spec.max_speed * (0.3 + 0.7 * draw(rng));
      seg.turn_rate = draw(rng) < 0.5 ? 0.0 : spec.max_turn_rate * (2.0 * draw(rng) - 1.0);
    }
    covered += seg.seconds;
    out.push_back(seg);
  }
  return out;
}

// Places the knee on the circle where both bone spheres meet, bending
// toward root-local forward.
Vec3 solve_knee(const Vec3& hip_pos, const Vec3& heel_pos, Real thigh, Real shin) {
  Vec3 d{heel_pos[0] - hip_pos[0], heel_pos[1] - hip_pos[1], heel_pos[2] - hip_pos[2]};
  const Real dist = norm3(d);
  for (Real& v : d) v /= dist;
  if (dist >= thigh + shin) {
    return {hip_pos[0] + thigh * d[0], hip_pos[1] + thigh * d[1], hip_pos[2] + thigh * d[2]};
  }
  const Real along = (thigh * thigh - shin * shin + dist * dist) / (2.0 * dist);
  const Real across = std::sqrt(std::max(0.0, thigh * thigh - along * along));
  Vec3 n{-d[2] * d[0], -d[2] * d[1], 1.0 - d[2] * d[2]};
  const Real nn = norm3(n);
  for (Real& v : n) v /= nn;
  return {hip_pos[0] + along * d[0] + across * n[0], hip_pos[1] + along * d[1] + across * n[1],
          hip_pos[2] + along * d[2] + across * n[2]};
}

struct Footfall {
  Real x = 0.0;
  Real z = 0.0;
  Real arc = 0.0;  // apex height of the swing that lands here
};

}  // namespace

Skeleton toy_skeleton() {
  Skeleton s;
  s.names = {"hip", "chest", "head", "left_knee", "left_heel", "right_knee", "right_heel"};
  s.parents = {-1, 0, 1, 0, 3, 0, 5};
  s.offsets = {Vec3{0.0, kHipHeight, 0.0},
               Vec3{0.0, kChest, 0.0},
               Vec3{0.0, kHead, 0.0},
               kKneeOffset,
               kHeelOffset,
               Vec3{-kKneeOffset[0], kKneeOffset[1], kKneeOffset[2]},
               kHeelOffset};
  s.mirror = std::vector<int>{0, 1, 2, 5, 6, 3, 4};
  return s;
}

ToyWalker generate_toy_walker(const ToyWalkerSpec& spec, std::uint64_t seed) {
  if (!(spec.fps > 0.0) || !(spec.seconds > 0.0)) {
    throw ContractError("toy walker needs positive duration and fps");
  }
  if (!(spec.cadence > 0.0) || !(spec.swing_fraction > 0.0 && spec.swing_fraction < 1.0)) {
    throw ContractError("toy walker cadence must be positive and swing fraction in (0, 1)");
  }
  if (spec.max_speed > kReachSpeed) {
    throw ContractError("toy walker speed is limited to " + std::to_string(kReachSpeed) + " cm/s");
  }
  for (const ToySegment& seg : spec.segments) {
    if (std::hypot(seg.speed, seg.lateral) > kReachSpeed || !(seg.seconds > 0.0)) {
      throw ContractError("toy segment needs positive duration and |speed| <= " +
                          std::to_string(kReachSpeed));
    }
  }

  const Real fps = spec.fps;
  const Real period = 2.0 / spec.cadence;  // one foot's cycle
  const Real swing = spec.swing_fraction * period;
  const std::size_t frames = static_cast<std::size_t>(std::llround(spec.seconds * fps));
  // The profile runs past the clip end so late footfalls can look ahead.
  const std::size_t lookahead = static_cast<std::size_t>(std::ceil(2.0 * period * fps)) + 2;
  const std::size_t total = frames + lookahead;

  std::mt19937_64 rng(seed);
  const std::vector<ToySegment> segments =
      spec.segments.empty() ? random_profile(spec, total / fps, rng) : spec.segments;

  std::vector<Real> speed(total);
  std::vector<Real> turn(total);
  std::vector<Real> lateral(total);
  {
    std::size_t seg = 0;
    Real seg_end = segments[0].seconds;
    Real v = segments[0].speed;
    Real w = segments[0].turn_rate;
    Real l = segments[0].lateral;
    for (std::size_t t = 0; t < total; ++t) {
      const Real time = static_cast<Real>(t) / fps;
      while (time >= seg_end && seg + 1 < segments.size()) {
        ++seg;
        seg_end += segments[seg].seconds;
      }
      v = approach(v, segments[seg].speed, spec.acceleration / fps);
      w = approach(w, segments[seg].turn_rate, spec.turn_acceleration / fps);
      l = approach(l, segments[seg].lateral, spec.acceleration / fps);
      speed[t] = v;
      turn[t] = w;
      lateral[t] = l;
    }
  }

  Tensor control = Tensor::zeros(total, kControlDims);
  for (std::size_t t = 0; t < total; ++t) set_control(control, t, {speed[t] / fps, lateral[t] / fps, turn[t] / fps});
  const Tensor roots = integrate_control(control);

  auto root_at_time = [&](Real time) {
    const Real f = std::clamp(time * fps, 0.0, static_cast<Real>(total - 1));
    const std::size_t a = static_cast<std::size_t>(f);
    const std::size_t b = std::min(a + 1, total - 1);
    const Real w = f - static_cast<Real>(a);
    return RootTransform{(1 - w) * roots(a, 0) + w * roots(b, 0),
                         (1 - w) * roots(a, 1) + w * roots(b, 1),
                         (1 - w) * roots(a, 2) + w * roots(b, 2)};
  };

  // Footfall k of foot f is the landing of the swing starting at (k + phase_f)·period.
  const Real phase[2] = {0.0, 0.5};
  const Real side[2] = {kFootLateral, -kFootLateral};
  const long first_k = -2;
  const long last_k = static_cast<long>(std::ceil(static_cast<Real>(total) / fps / period)) + 1;
  std::vector<Footfall> falls[2];
  for (int f = 0; f < 2; ++f) {
    for (long k = first_k; k <= last_k; ++k) {
      const Real start = (static_cast<Real>(k) + phase[f]) * period;
      const Real mid_stance = start + swing + 0.5 * (period - swing);
      const Vec3 target = to_world(root_at_time(mid_stance), {side[f], 0.0, 0.0});
      Footfall fall{target[0], target[2], 0.0};
      if (!falls[f].empty()) {
        const Footfall& prev = falls[f].back();
        const Real dist = std::hypot(fall.x - prev.x, fall.z - prev.z);
        if (dist < kSkipDistance) {
          fall = {prev.x, prev.z, 0.0};
        } else {
          fall.arc = std::min(kMaxArc, 0.2 * dist);
        }
      }
      falls[f].push_back(fall);
    }
  }

  const Skeleton skeleton = toy_skeleton();
  const Real thigh = norm3(kKneeOffset);
  const Real shin = norm3(kHeelOffset);
  ToyWalker out;
  MotionClip& clip = out.clip;
  clip.fps = fps;
  clip.skeleton = skeleton;
  clip.poses = Tensor::zeros(frames, skeleton.pose_dims());
  clip.control = Tensor::zeros(frames, kControlDims);
  clip.world_root = Tensor::zeros(frames, 3);
  std::vector<Vec3> heel_world[2];

  for (std::size_t t = 0; t < frames; ++t) {
    const Real time = static_cast<Real>(t) / fps;
    const RootTransform root = root_at(roots, t);
    set_root(*clip.world_root, t, root);
    set_control(*clip.control, t, control_at(control, t));

    const Real effort = std::hypot(speed[t], lateral[t]) / kReachSpeed;
    const Real bob = -1.5 * effort * 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * 2.0 * time / period));
    // Weight shifts toward the stance foot once per gait cycle; the pelvis
    // also surges slightly fore and aft twice per cycle.
    const Real cycle = 2.0 * std::numbers::pi * time / period;
    const Real sway = 2.0 * effort * std::sin(cycle);
    const Real surge = 1.0 * effort * std::sin(2.0 * cycle);
    const Vec3 hip_pos{sway, kHipHeight + bob, surge};
    const Real lean = 0.12 * speed[t] / kReachSpeed;
    const Real roll = -0.04 * sway + 0.1 * turn[t];
    auto up = [](Real pitch, Real tilt) {
      return Vec3{std::sin(tilt), std::cos(tilt) * std::cos(pitch), std::cos(tilt) * std::sin(pitch)};
    };
    const Vec3 chest_dir = up(lean, roll);
    const Vec3 head_dir = up(1.5 * lean, 1.5 * roll);
    const Vec3 chest_pos{hip_pos[0] + kChest * chest_dir[0], hip_pos[1] + kChest * chest_dir[1],
                         hip_pos[2] + kChest * chest_dir[2]};
    const Vec3 head_pos{chest_pos[0] + kHead * head_dir[0], chest_pos[1] + kHead * head_dir[1],
                        chest_pos[2] + kHead * head_dir[2]};
    Vec3 joints[7];
    joints[hip] = hip_pos;
    joints[chest] = chest_pos;
    joints[head] = head_pos;

    for (int f = 0; f < 2; ++f) {
      const Real q = time / period - phase[f];
      const long k = static_cast<long>(std::floor(q));
      const Real in_cycle = q - static_cast<Real>(k);
      const Footfall& landed = falls[f][static_cast<std::size_t>(k - first_k)];
      Vec3 world;
      if (in_cycle * period < swing) {
        const Footfall& from = falls[f][static_cast<std::size_t>(k - 1 - first_k)];
        const Real u = in_cycle * period / swing;
        const Real blend = 0.5 * (1.0 - std::cos(std::numbers::pi * u));
        world = {from.x + (landed.x - from.x) * blend, landed.arc * std::sin(std::numbers::pi * u),
                 from.z + (landed.z - from.z) * blend};
      } else {
        world = {landed.x, 0.0, landed.z};
      }
      heel_world[f].push_back(world);
      const Vec3 heel_local = to_local(root, world);
      const int heel_j = f == 0 ? left_heel : right_heel;
      const int knee_j = f == 0 ? left_knee : right_knee;
      joints[heel_j] = heel_local;
      joints[knee_j] = solve_knee(hip_pos, heel_local, thigh, shin);
    }
    for (int j = 0; j < 7; ++j)
      for (int a = 0; a < 3; ++a) clip.poses(t, 3 * j + a) = joints[j][a];
  }

  ToyGroundTruth& truth = out.truth;
  truth.feet = {left_heel, right_heel};
  std::vector<Real> durations;
  for (int f = 0; f < 2; ++f) {
    std::vector<FrameRange> runs;
    std::size_t start = 0;
    bool open = false;
    for (std::size_t t = 0; t <= frames; ++t) {
      bool still = false;
      if (t < frames) {
        const std::size_t a = t == 0 ? 0 : t - 1;
        const std::size_t b = t + 1 == frames ? t : t + 1;
        // A swing ends a rounding error away from its landing spot.
        still = std::hypot(heel_world[f][a][0] - heel_world[f][b][0],
                           heel_world[f][a][2] - heel_world[f][b][2]) <= kStillDistance;
      }
      if (still && !open) {
        start = t;
        open = true;
      } else if (!still && open) {
        if (t - start >= 2) runs.emplace_back(start, t);
        open = false;
      }
    }
    for (const FrameRange& r : runs) durations.push_back(static_cast<Real>(r.second - r.first) / fps);
    truth.planted.push_back(std::move(runs));
  }
  truth.step_count = durations.size();
  if (!durations.empty()) {
    Real sum = 0.0;
    for (Real d : durations) sum += d;
    truth.mean_duration = sum / static_cast<Real>(durations.size());
    Real var = 0.0;
    for (Real d : durations) var += (d - truth.mean_duration) * (d - truth.mean_duration);
    truth.std_duration = std::sqrt(var / static_cast<Real>(durations.size()));
  }
  return out;
}

}  // namespace moglow::motion
