#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "moglow/error.hpp"
#include "moglow/footsteps.hpp"
#include "moglow/toy_walker.hpp"

using namespace moglow;
using namespace moglow::eval;
using motion::MotionClip;

namespace {

// Root, one spine joint and two feet, all bones 10 cm long.
motion::Skeleton four_joint_skeleton() {
  motion::Skeleton s;
  s.names = {"hip", "spine", "left_heel", "right_heel"};
  s.parents = {-1, 0, 0, 0};
  s.offsets = {{0, 0, 0}, {0, 10, 0}, {6, -8, 0}, {-6, -8, 0}};
  return s;
}

Tensor rest_pose_row(const motion::Skeleton& s, Real scale = 1.0) {
  std::vector<Real> row;
  std::vector<motion::Vec3> pos(s.joints());
  for (std::size_t j = 0; j < s.joints(); ++j) {
    pos[j] = s.offsets[j];
    if (s.parents[j] >= 0) {
      for (int k = 0; k < 3; ++k) pos[j][k] += pos[s.parents[j]][k];
    }
    for (int k = 0; k < 3; ++k) row.push_back(scale * pos[j][k]);
  }
  return Tensor::row(row);
}

MotionClip constant_clip(std::size_t frames, Real speed_cm_s, Real scale = 1.0) {
  MotionClip c;
  c.fps = 20.0;
  c.skeleton = four_joint_skeleton();
  const Tensor row = rest_pose_row(c.skeleton, scale);
  c.poses = Tensor::zeros(frames, row.size());
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t k = 0; k < row.size(); ++k) c.poses(t, k) = row[k];
  Tensor control = Tensor::zeros(frames, 3);
  for (std::size_t t = 1; t < frames; ++t) control(t, 0) = speed_cm_s / c.fps;
  c.world_root = motion::integrate_control(control);
  c.control = control;
  return c;
}

std::vector<int> heels(const MotionClip& c) { return resolve_feet(c.skeleton, "heels"); }

MotionClip rigidly_moved(const MotionClip& c, Real dx, Real dz, Real phi) {
  MotionClip out = c;
  for (std::size_t t = 0; t < c.frames(); ++t) {
    motion::RootTransform r = motion::root_at(*c.world_root, t);
    const Real x = r.x * std::cos(phi) + r.z * std::sin(phi) + dx;
    const Real z = -r.x * std::sin(phi) + r.z * std::cos(phi) + dz;
    motion::set_root(*out.world_root, t, {x, z, r.heading + phi});
  }
  return out;
}

}  // namespace

TEST(DetectSteps, RunLengthDefinition) {
  const std::vector<Real> speed{0, 0, 0, 5, 5, 0, 0};
  const auto steps = detect_steps(speed, 1.0);
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_EQ(steps[0], FrameRange(0, 3));
  EXPECT_EQ(steps[1], FrameRange(5, 7));
  EXPECT_TRUE(detect_steps(speed, 0.0).empty());
  const auto all = detect_steps(speed, 1e9);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0], FrameRange(0, 7));
}

TEST(DetectSteps, ShortRunsAreDiscarded) {
  const std::vector<Real> speed{0, 9, 0, 0, 9, 0};
  EXPECT_EQ(detect_steps(speed, 1.0).size(), 1u);
  EXPECT_EQ(detect_steps(speed, 1.0, 1).size(), 3u);
}

TEST(DetectSteps, CoverageGrowsWithTolerance) {
  std::mt19937_64 rng(5);
  std::exponential_distribution<Real> e(0.1);
  std::vector<Real> speed(400);
  for (Real& s : speed) s = e(rng);
  auto covered = [&](Real tol) {
    std::vector<bool> in(speed.size(), false);
    for (auto [a, b] : detect_steps(speed, tol))
      for (std::size_t t = a; t < b; ++t) in[t] = true;
    return in;
  };
  for (Real v = 1; v < 40; v += 1.5) {
    const auto lo = covered(v);
    const auto hi = covered(v + 0.7);
    for (std::size_t t = 0; t < speed.size(); ++t) EXPECT_TRUE(!lo[t] || hi[t]);
  }
}

TEST(V95, Definition) {
  const std::vector<Real> grid{1, 2, 3, 4, 5, 6};
  const std::vector<std::size_t> counts{0, 50, 96, 100, 100, 60};
  EXPECT_EQ(v95(grid, counts), 3.0);
  const std::vector<std::size_t> step{7, 7, 7, 7, 7, 7};
  EXPECT_EQ(v95(grid, step), 1.0);
  const std::vector<std::size_t> zero(6, 0);
  EXPECT_THROW(v95(grid, zero), UndefinedResultError);
}

TEST(Durations, Arithmetic) {
  const std::vector<FrameRange> one{{0, 6}};
  const DurationStats a = step_duration_stats(one, 20.0);
  EXPECT_NEAR(a.mean, 0.30, 1e-15);
  EXPECT_FALSE(a.stddev.has_value());
  const std::vector<FrameRange> two{{0, 4}, {10, 18}};
  const DurationStats b = step_duration_stats(two, 20.0);
  EXPECT_NEAR(b.mean, 0.30, 1e-15);
  ASSERT_TRUE(b.stddev.has_value());
  EXPECT_NEAR(*b.stddev, 0.10, 1e-15);
  EXPECT_THROW(step_duration_stats(std::vector<FrameRange>{}, 20.0), UndefinedResultError);
}

TEST(FootstepCurve, GridAndSlidingFeet) {
  // Feet glued to a root moving at 30.5 cm/s: no step until v_tol passes it.
  const MotionClip c = constant_clip(60, 30.5);
  FootstepOptions o;
  o.tol_step = 1.0;
  o.tol_max = 40.0;
  const FootstepReport r = footstep_curve(c, heels(c), o);
  ASSERT_EQ(r.tolerances.size(), 40u);
  EXPECT_EQ(r.tolerances.front(), 1.0);
  EXPECT_EQ(r.tolerances.back(), 40.0);
  for (std::size_t i = 0; i < r.tolerances.size(); ++i) {
    const std::size_t expected = r.tolerances[i] < 30.5 ? 0u : 2u;
    EXPECT_EQ(r.counts[i], expected) << "v_tol " << r.tolerances[i];
  }
  EXPECT_EQ(r.plateau, 2u);
  EXPECT_EQ(r.v95, 31.0);
}

TEST(FootstepCurve, NeedsWorldRoot) {
  MotionClip c = constant_clip(10, 0.0);
  c.world_root.reset();
  EXPECT_THROW(footstep_curve(c, heels(c)), ContractError);
}

TEST(FootstepCurve, ToyWalkerPlateauMatchesGroundTruth) {
  motion::ToyWalkerSpec spec;
  // 10.25 s so the clip does not end one frame into a fresh contact, which
  // a wide tolerance would count but the ground truth (runs of 2+) cannot.
  spec.seconds = 10.25;
  spec.segments = {{10.25, 100.0, 0.0, 0.0}};
  const motion::ToyWalker w = motion::generate_toy_walker(spec, 1);
  const FootstepReport r = footstep_curve(w.clip, w.truth.feet);
  EXPECT_GT(w.truth.step_count, 10u);
  EXPECT_EQ(r.plateau, w.truth.step_count);
  EXPECT_NEAR(r.durations.mean, w.truth.mean_duration, 1.0 / spec.fps);
}

TEST(FootstepCurve, ToyWalkerRandomProfileDurations) {
  motion::ToyWalkerSpec spec;
  spec.seconds = 60.0;
  const motion::ToyWalker w = motion::generate_toy_walker(spec, 13);
  const FootstepReport r = footstep_curve(w.clip, w.truth.feet);
  // At most one extra contact: a landing on the clip's last frame.
  EXPECT_GE(r.plateau, w.truth.step_count);
  EXPECT_LE(r.plateau, w.truth.step_count + 1);
  EXPECT_EQ(r.counts.front(), w.truth.step_count);
  EXPECT_NEAR(r.durations.mean, w.truth.mean_duration, 1.0 / spec.fps);
}

TEST(FootstepCurve, PeakFollowsFirstNonzeroTolerance) {
  motion::ToyWalkerSpec spec;
  spec.seconds = 30.0;
  const motion::ToyWalker w = motion::generate_toy_walker(spec, 2);
  const FootstepReport r = footstep_curve(w.clip, w.truth.feet);
  std::size_t first = r.counts.size(), argmax = 0;
  for (std::size_t i = 0; i < r.counts.size(); ++i) {
    if (r.counts[i] > 0 && first == r.counts.size()) first = i;
    if (r.counts[i] > r.counts[argmax]) argmax = i;
  }
  ASSERT_LT(first, r.counts.size());
  EXPECT_GE(argmax, first);
}

TEST(FootstepCurve, InvariantToRigidMotionOfTheClip) {
  motion::ToyWalkerSpec spec;
  spec.seconds = 20.0;
  const motion::ToyWalker w = motion::generate_toy_walker(spec, 4);
  const MotionClip moved = rigidly_moved(w.clip, 250.0, -80.0, 0.7);
  const FootstepReport a = footstep_curve(w.clip, w.truth.feet);
  const FootstepReport b = footstep_curve(moved, w.truth.feet);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.v95, b.v95);
  EXPECT_NEAR(stillness_metric(w.clip), stillness_metric(moved), 1e-9);
  EXPECT_NEAR(bone_length_rmse(w.clip), bone_length_rmse(moved), 1e-12);
}

TEST(BoneRmse, RigidClipIsZero) {
  const MotionClip c = constant_clip(20, 50.0);
  EXPECT_NEAR(bone_length_rmse(c), 0.0, 1e-12);
}

TEST(BoneRmse, UniformScaleOfTenCentimetreBones) {
  const MotionClip c = constant_clip(20, 0.0, 1.1);
  EXPECT_NEAR(bone_length_rmse(c), 1.0, 1e-12);
}

TEST(Stillness, FrozenPoseIsZeroAndRunningInPlaceIsNot) {
  const MotionClip frozen = constant_clip(40, 0.0);
  EXPECT_EQ(stillness_metric(frozen), 0.0);

  MotionClip running = frozen;
  for (std::size_t t = 0; t < running.frames(); ++t) {
    const Real phase = 2.0 * M_PI * static_cast<Real>(t) / 10.0;
    running.poses(t, 3 * 2 + 2) += 15.0 * std::sin(phase);
    running.poses(t, 3 * 3 + 2) -= 15.0 * std::sin(phase);
  }
  const MotionClip walking = constant_clip(40, 20.0);
  EXPECT_GT(stillness_metric(running), stillness_metric(walking));
}

TEST(Report, KeyValueCsvAndSvg) {
  const MotionClip c = constant_clip(60, 30.5);
  FootstepOptions o;
  o.tol_max = 35.0;
  const FootstepReport r = footstep_curve(c, heels(c), o);
  const KeyValue kv = report_keyvalue(r, 0.0, 30.0);
  EXPECT_EQ(kv.require_real("v95"), 31.0);
  const std::string csv = curve_csv(r);
  EXPECT_NE(csv.find("31,2"), std::string::npos) << csv;
  const std::string svg = curve_svg(r, "test");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Report, ResolveFeet) {
  const motion::Skeleton s = four_joint_skeleton();
  EXPECT_EQ(resolve_feet(s, "heels"), (std::vector<int>{2, 3}));
  EXPECT_EQ(resolve_feet(s, "spine,hip"), (std::vector<int>{1, 0}));
  EXPECT_ANY_THROW(resolve_feet(s, "tail"));
}
