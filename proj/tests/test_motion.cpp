#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "moglow/bvh.hpp"
#include "moglow/control_profiles.hpp"
#include "moglow/error.hpp"
#include "moglow/footsteps.hpp"
#include "moglow/preprocess.hpp"
#include "moglow/scaler.hpp"
#include "moglow/toy_walker.hpp"
#include "oracles.hpp"

using namespace moglow;
using namespace moglow::motion;

namespace {

constexpr Real kPi = std::numbers::pi;

Tensor random_control(std::size_t frames, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  Tensor c = Tensor::zeros(frames, 3);
  for (std::size_t t = 0; t < frames; ++t) set_control(c, t, {3.0 * u(rng), 1.0 * u(rng), 0.2 * u(rng)});
  return c;
}

MotionClip random_clip(std::size_t frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MotionClip clip;
  clip.fps = 20.0;
  clip.skeleton = toy_skeleton();
  clip.poses = oracle::random_matrix(frames, clip.skeleton.pose_dims(), rng, 10.0);
  clip.control = random_control(frames, rng);
  clip.world_root = integrate_control(*clip.control, {3.0, -2.0, 0.4});
  return clip;
}

void expect_near(const Tensor& a, const Tensor& b, Real tol) {
  ASSERT_EQ(a.shape(), b.shape());
  EXPECT_LT(oracle::max_abs_diff(a, b), tol);
}

}  // namespace

TEST(RootFrame, HeadingZeroFacesPlusZ) {
  const RootTransform r{0.0, 0.0, 0.0};
  const Vec3 fwd = to_world(r, {0.0, 0.0, 1.0});
  EXPECT_NEAR(fwd[2], 1.0, 1e-15);
  const RootTransform left{0.0, 0.0, kPi / 2};
  const Vec3 x = to_world(left, {1.0, 0.0, 0.0});
  EXPECT_NEAR(x[0], 0.0, 1e-15);
  EXPECT_NEAR(x[2], -1.0, 1e-15);
}

TEST(RootFrame, LocalWorldRoundTrip) {
  const RootTransform r{12.0, -7.0, 2.3};
  const Vec3 p{1.5, 80.0, -4.0};
  const Vec3 back = to_local(r, to_world(r, p));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(back[k], p[k], 1e-12);
}

TEST(RootFrame, ConstantForwardControlAdvancesFiveCmPerFrameAtTwentyFps) {
  const Tensor c = synthetic_control("straight", 1.0, 20.0);
  const Tensor roots = integrate_control(c);
  for (std::size_t t = 1; t < roots.rows(); ++t) {
    EXPECT_NEAR(roots(t, 1) - roots(t - 1, 1), 5.0, 1e-12);
    EXPECT_EQ(roots(t, 0), 0.0);
  }
}

TEST(RootFrame, RelativeInvertsIntegrate) {
  std::mt19937_64 rng(1);
  const Tensor c = random_control(200, rng);
  const Tensor roots = integrate_control(c, {1.0, 2.0, 3.0});
  const Tensor back = control_from_roots(roots);
  for (std::size_t t = 1; t < 200; ++t)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(back(t, k), c(t, k), 1e-10);
}

TEST(RootFrame, InverseControlUndoesTheStep) {
  const ControlFrame c{4.0, -1.5, 0.3};
  const RootTransform start{5.0, 6.0, -0.7};
  const RootTransform back = integrate(integrate(start, c), inverse_control(c));
  EXPECT_NEAR(back.x, start.x, 1e-12);
  EXPECT_NEAR(back.z, start.z, 1e-12);
  EXPECT_NEAR(back.heading, start.heading, 1e-12);
}

TEST(Smoothing, ZeroSigmaPassesThroughAndConstantsSurvive) {
  const std::vector<Real> s{1.0, 5.0, -2.0, 8.0};
  EXPECT_EQ(gaussian_smooth(s, 0.0), s);
  const std::vector<Real> flat(50, 3.25);
  for (Real v : gaussian_smooth(flat, 4.0)) EXPECT_NEAR(v, 3.25, 1e-13);
  EXPECT_THROW(gaussian_smooth(s, -1.0), ContractError);
}

TEST(Smoothing, MatchesDirectConvolutionInTheInterior) {
  std::mt19937_64 rng(2);
  const Tensor x = oracle::random_matrix(1, 100, rng);
  const std::vector<Real> s(x.data().begin(), x.data().end());
  const std::vector<Real> y = gaussian_smooth(s, 2.0);
  const std::size_t t = 50;
  Real acc = 0.0, w = 0.0;
  for (int k = -8; k <= 8; ++k) {
    const Real g = std::exp(-0.5 * k * k / 4.0);
    acc += g * s[t + k];
    w += g;
  }
  EXPECT_NEAR(y[t], acc / w, 1e-14);
}

TEST(RootExtraction, StraightWalkAlongXHasHeadingHalfPi) {
  Skeleton sk = toy_skeleton();
  const std::size_t frames = 60;
  Tensor pos = Tensor::zeros(frames, sk.pose_dims());
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t j = 0; j < sk.joints(); ++j) {
      pos(t, 3 * j) = 5.0 * static_cast<Real>(t) + static_cast<Real>(j);
      pos(t, 3 * j + 1) = 10.0 * static_cast<Real>(j);
    }
  RootExtractionOptions opts;
  opts.sigma_frames = 2.0;
  const MotionClip clip = clip_from_positions(pos, sk, 20.0, opts);
  for (std::size_t t = 9; t + 9 < frames; ++t) {
    EXPECT_NEAR((*clip.world_root)(t, 2), kPi / 2, 1e-9);
    EXPECT_NEAR((*clip.control)(t, 0), 5.0, 1e-9);
  }
  // Poses reconstruct the input positions exactly.
  expect_near(world_positions(clip), pos, 1e-9);
}

TEST(RootExtraction, RejectsMismatchedWidth) {
  EXPECT_THROW(clip_from_positions(Tensor::zeros(10, 5), toy_skeleton(), 20.0), DimensionError);
}

TEST(Augment, MirrorIsAnExactInvolution) {
  const MotionClip c = random_clip(30, 3);
  const MotionClip twice = mirror(mirror(c));
  EXPECT_EQ(twice.poses, c.poses);
  EXPECT_EQ(*twice.control, *c.control);
  EXPECT_EQ(*twice.world_root, *c.world_root);
}

TEST(Augment, MirrorReflectsTheWorldMotion) {
  const MotionClip c = random_clip(30, 4);
  const MotionClip m = mirror(c);
  const Tensor wp = world_positions(c);
  const Tensor wm = world_positions(m);
  const std::vector<int>& pair = *c.skeleton.mirror;
  for (std::size_t t = 0; t < 30; ++t)
    for (std::size_t j = 0; j < c.skeleton.joints(); ++j) {
      const std::size_t q = static_cast<std::size_t>(pair[j]);
      EXPECT_NEAR(wm(t, 3 * j), -wp(t, 3 * q), 1e-9);
      EXPECT_NEAR(wm(t, 3 * j + 2), wp(t, 3 * q + 2), 1e-9);
    }
  // Mirrored control integrates to the mirrored root.
  expect_near(integrate_control(*m.control, root_at(*m.world_root, 0)), *m.world_root, 1e-9);
}

TEST(Augment, MirrorNeedsATable) {
  MotionClip c = random_clip(5, 5);
  c.skeleton.mirror.reset();
  EXPECT_THROW(mirror(c), ContractError);
}

TEST(Augment, TimeReverseIntegratesToTheReversedPath) {
  const MotionClip c = random_clip(40, 6);
  const MotionClip r = time_reverse(c);
  expect_near(integrate_control(*r.control, root_at(*r.world_root, 0)), *r.world_root, 1e-9);
  const MotionClip rr = time_reverse(r);
  EXPECT_EQ(rr.poses, c.poses);
  expect_near(*rr.control, *c.control, 1e-12);
}

TEST(Augment, AugmentProducesFourVariants) {
  const std::vector<MotionClip> all = augment(random_clip(10, 7));
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[3].poses, time_reverse(mirror(all[0])).poses);
}

TEST(Resample, IntegerFactorKeepsEveryKthFrame) {
  MotionClip c = random_clip(60, 8);
  c.fps = 60.0;
  const MotionClip d = downsample(c, 20.0);
  ASSERT_EQ(d.frames(), 20u);
  for (std::size_t t = 0; t < 20; ++t) {
    for (std::size_t k = 0; k < c.pose_dims(); ++k) EXPECT_EQ(d.poses(t, k), c.poses(3 * t, k));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR((*d.world_root)(t, k), (*c.world_root)(3 * t, k), 1e-9);
  }
}

TEST(Resample, FractionalRatioInterpolates) {
  MotionClip c = random_clip(31, 9);
  c.fps = 30.0;
  const MotionClip d = downsample(c, 20.0);
  ASSERT_EQ(d.frames(), 21u);
  for (std::size_t k = 0; k < c.pose_dims(); ++k) {
    EXPECT_NEAR(d.poses(1, k), 0.5 * (c.poses(1, k) + c.poses(2, k)), 1e-12);
    EXPECT_EQ(d.poses(2, k), c.poses(3, k));
  }
}

TEST(Resample, UpsamplingIsRefused) {
  EXPECT_THROW(downsample(random_clip(10, 10), 40.0), ContractError);
}

TEST(Windows, StrideFollowsOverlap) {
  const auto w = window_slices(100, 40, 0.5);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w[1], FrameRange(20, 60));
  EXPECT_EQ(w.back(), FrameRange(60, 100));
  EXPECT_TRUE(window_slices(30, 40, 0.5).empty());
  EXPECT_THROW(window_slices(10, 0, 0.5), ContractError);
  EXPECT_THROW(window_slices(10, 4, 1.0), ContractError);
}

TEST(Windows, SliceOutsideClipIsRejected) {
  EXPECT_THROW(slice_clip(random_clip(10, 11), {5, 11}), ContractError);
}

TEST(Scaler, StandardizesToZeroMeanUnitVariance) {
  const std::vector<MotionClip> clips{random_clip(50, 12), random_clip(30, 13)};
  const Scaler s = fit_scaler(clips);
  Real mean = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const MotionClip& c : clips) {
    const Tensor z = s.standardize_poses(c.poses);
    for (std::size_t t = 0; t < z.rows(); ++t) {
      mean += z(t, 4);
      sq += z(t, 4) * z(t, 4);
      ++n;
    }
  }
  EXPECT_NEAR(mean / n, 0.0, 1e-12);
  EXPECT_NEAR(sq / n, 1.0, 1e-12);
  expect_near(s.unstandardize_poses(s.standardize_poses(clips[0].poses)), clips[0].poses, 1e-12);
}

TEST(Scaler, ZeroVarianceIsDegenerate) {
  MotionClip c = random_clip(10, 14);
  for (std::size_t t = 0; t < 10; ++t) c.poses(t, 2) = 1.0;
  const std::vector<MotionClip> clips{c};
  EXPECT_THROW(fit_scaler(clips), DegenerateDataError);
}

namespace {

const char* kBvh = R"(HIERARCHY
ROOT hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT spine
  {
    OFFSET 0 10 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0 0 5
    }
  }
}
MOTION
Frames: 2
Frame Time: 0.0333333
1 2 3 0 0 90 0 0 0
0 0 0 30 20 10 0 45 0
)";

using Mat = std::array<std::array<Real, 3>, 3>;

Mat rot(char axis, Real deg) {
  const Real a = deg * kPi / 180.0, c = std::cos(a), s = std::sin(a);
  if (axis == 'X') return {{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
  if (axis == 'Y') return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
  return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
}

Mat mul(const Mat& a, const Mat& b) {
  Mat m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) m[i][j] += a[i][k] * b[k][j];
  return m;
}

Vec3 apply(const Mat& m, const Vec3& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2], m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

}  // namespace

TEST(Bvh, ParsesHierarchyAndMotion) {
  const BvhDocument doc = parse_bvh(kBvh);
  ASSERT_EQ(doc.joints.size(), 3u);
  EXPECT_EQ(doc.channel_count(), 9u);
  EXPECT_NEAR(doc.fps(), 30.0, 1e-3);
  const Skeleton sk = doc.skeleton();
  EXPECT_EQ(sk.names[2], "spine_end");
  EXPECT_EQ(sk.parents, (std::vector<int>{-1, 0, 1}));
}

TEST(Bvh, ForwardKinematicsMatchesComposedRotations) {
  const BvhDocument doc = parse_bvh(kBvh);
  const Tensor p = bvh_positions(doc);
  // Frame 1: root Z30 X20 Y10, spine Z0 X45 Y0.
  const Mat r0 = mul(mul(rot('Z', 30), rot('X', 20)), rot('Y', 10));
  const Mat r1 = mul(r0, mul(mul(rot('Z', 0), rot('X', 45)), rot('Y', 0)));
  const Vec3 spine = apply(r0, {0, 10, 0});
  const Vec3 tip = apply(r1, {0, 0, 5});
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(p(1, 3 + k), spine[k], 1e-12);
    EXPECT_NEAR(p(1, 6 + k), spine[k] + tip[k], 1e-12);
  }
  // Frame 0: root translated, spine child of a 90° Y turn.
  EXPECT_NEAR(p(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(p(0, 6), 1.0 + 5.0, 1e-9);
  EXPECT_NEAR(p(0, 8), 3.0, 1e-9);
}

TEST(Bvh, FrameCountMismatchNamesTheLine) {
  std::string bad = kBvh;
  bad.replace(bad.find("Frames: 2"), 9, "Frames: 3");
  try {
    parse_bvh(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.line(), 0);
  }
}

TEST(Bvh, UnknownChannelIsAParseError) {
  std::string bad = kBvh;
  bad.replace(bad.find("Xposition"), 9, "Wposition");
  EXPECT_THROW(parse_bvh(bad), ParseError);
}

TEST(ControlProfiles, NamedProfilesAndCsv) {
  for (const std::string& n : synthetic_control_names()) {
    const Tensor c = synthetic_control(n, 30.0, 20.0);
    EXPECT_EQ(c.rows(), 600u) << n;
  }
  EXPECT_THROW(synthetic_control("moonwalk", 1.0, 20.0), ContractError);
  const Tensor c = parse_control_csv("t,forward,lateral,rotation\n0,100,0,0\n0.05,100,20,1\n", 20.0);
  ASSERT_EQ(c.rows(), 2u);
  EXPECT_DOUBLE_EQ(c(1, 0), 5.0);
  EXPECT_DOUBLE_EQ(c(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(c(1, 2), 0.05);
  EXPECT_THROW(parse_control_csv("0,1,2\n", 20.0), ParseError);
  EXPECT_THROW(parse_control_csv("0,1,2,3\n0,1,2,3\n", 20.0), ParseError);
}

TEST(ToyWalker, SameSeedSameClip) {
  ToyWalkerSpec spec;
  spec.seconds = 20.0;
  const ToyWalker a = generate_toy_walker(spec, 5);
  const ToyWalker b = generate_toy_walker(spec, 5);
  EXPECT_EQ(a.clip.poses, b.clip.poses);
  EXPECT_EQ(*a.clip.control, *b.clip.control);
  EXPECT_NE(a.clip.poses, generate_toy_walker(spec, 6).clip.poses);
}

TEST(ToyWalker, BonesKeepTheirRestLengths) {
  ToyWalkerSpec spec;
  spec.seconds = 30.0;
  const ToyWalker w = generate_toy_walker(spec, 7);
  EXPECT_LT(eval::bone_length_rmse(w.clip), 1e-9);
}

TEST(ToyWalker, StanceHeelsAreExactlyStillAndMatchTheDetector) {
  ToyWalkerSpec spec;
  spec.seconds = 60.0;
  const ToyWalker w = generate_toy_walker(spec, 8);
  const Tensor world = world_positions(w.clip);
  for (std::size_t f = 0; f < w.truth.feet.size(); ++f) {
    const std::vector<Real> speed = eval::horizontal_speed(world, w.truth.feet[f], w.clip.fps);
    const auto detected = eval::detect_steps(speed, 1e-6);
    EXPECT_EQ(detected, w.truth.planted[f]);
  }
  EXPECT_GT(w.truth.step_count, 40u);
  // Cadence 2 footfalls/s with a 40% swing: walking stance lasts 0.6 s.
  EXPECT_GT(w.truth.mean_duration, 0.5);
}

TEST(ToyWalker, ControlIntegratesToTheWorldRoot) {
  ToyWalkerSpec spec;
  spec.seconds = 20.0;
  const ToyWalker w = generate_toy_walker(spec, 9);
  expect_near(integrate_control(*w.clip.control, root_at(*w.clip.world_root, 0)), *w.clip.world_root, 1e-9);
}

TEST(ToyWalker, StandingStillProfileHasAllHeelFramesInStance) {
  ToyWalkerSpec spec;
  spec.seconds = 10.0;
  spec.segments = {{10.0, 0.0, 0.0}};
  const ToyWalker w = generate_toy_walker(spec, 1);
  ASSERT_EQ(w.truth.planted.size(), 2u);
  for (const auto& runs : w.truth.planted) {
    ASSERT_EQ(runs.size(), 1u);
    EXPECT_EQ(runs[0], FrameRange(0, w.clip.frames()));
  }
}

TEST(ToyWalker, EveryPoseAndControlDimensionVaries) {
  ToyWalkerSpec spec;
  spec.seconds = 120.0;
  const ToyWalker w = generate_toy_walker(spec, 10);
  const std::vector<MotionClip> clips{w.clip};
  EXPECT_NO_THROW(fit_scaler(clips));
}
