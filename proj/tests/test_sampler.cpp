#include <gtest/gtest.h>

#include <cmath>

#include "moglow/error.hpp"
#include "moglow/sampler.hpp"
#include "moglow/toy_walker.hpp"
#include "model_fixtures.hpp"

using namespace moglow;

namespace {

constexpr std::size_t kDims = 21;  // toy skeleton, 7 joints

MoGlowModel toy_model(std::uint64_t seed = 3) {
  MoGlowModel m = fixture::perturbed_model(kDims, 2, 3, 16, seed, 0.2);
  m.scaler = motion::Scaler::identity(kDims, 3);
  return m;
}

Tensor constant_control(std::size_t frames, Real fwd, Real lat = 0.0, Real rot = 0.0) {
  Tensor c = Tensor::zeros(frames, 3);
  for (std::size_t t = 0; t < frames; ++t) {
    c(t, 0) = fwd;
    c(t, 1) = lat;
    c(t, 2) = rot;
  }
  return c;
}

}  // namespace

TEST(Sampler, IdentityModelWithZeroNoiseEmitsTheMeanPose) {
  ModelConfig cfg = ModelConfig::desk(kDims);
  MoGlowModel m = MoGlowModel::create(cfg, 1);
  for (FlowStep& s : m.steps) {
    s.actnorm.initialized = true;
    // Identity LU: unit diagonal, no permutation.
    s.linear = flow::LinearLU::identity(kDims);
  }
  m.scaler = motion::Scaler::identity(kDims, 3);
  for (std::size_t d = 0; d < kDims; ++d) m.scaler.pose_mean[d] = static_cast<Real>(d);
  SamplerState st = make_sampler_state(m);
  const std::vector<Real> zero(kDims, 0.0);
  const PoseFrame f = sample_step(m, st, {1.0, 0.0, 0.0}, zero);
  for (std::size_t d = 0; d < kDims; ++d) EXPECT_EQ(f.pose[d], static_cast<Real>(d));
}

TEST(Sampler, UninitialisedStateIsRejected) {
  const MoGlowModel m = toy_model();
  SamplerState st;
  const std::vector<Real> zero(kDims, 0.0);
  EXPECT_THROW(sample_step(m, st, {}, zero), ContractError);
}

TEST(Sampler, SameSeedAndStateGiveBitIdenticalPoses) {
  const MoGlowModel m = toy_model();
  const auto sk = motion::toy_skeleton();
  const Tensor c = constant_control(30, 4.0, 0.0, 0.02);
  const auto a = sample_sequence(m, sk, c, {1.0, 77});
  const auto b = sample_sequence(m, sk, c, {1.0, 77});
  EXPECT_TRUE(a.poses == b.poses);
  EXPECT_TRUE(*a.world_root == *b.world_root);
  const auto other = sample_sequence(m, sk, c, {1.0, 78});
  EXPECT_FALSE(a.poses == other.poses);
}

TEST(Sampler, ZeroTemperatureIgnoresTheSeed) {
  const MoGlowModel m = toy_model();
  const auto sk = motion::toy_skeleton();
  const Tensor c = constant_control(25, 3.0);
  const auto a = sample_sequence(m, sk, c, {0.0, 1});
  const auto b = sample_sequence(m, sk, c, {0.0, 999});
  EXPECT_TRUE(a.poses == b.poses);
}

TEST(Sampler, ChangingFutureControlNeverChangesPastPoses) {
  const MoGlowModel m = toy_model();
  const auto sk = motion::toy_skeleton();
  Tensor c = constant_control(40, 5.0, 0.5, 0.01);
  const auto base = sample_sequence(m, sk, c, {1.0, 5});
  for (std::size_t cut : {1u, 17u, 39u}) {
    Tensor changed = c;
    for (std::size_t t = cut; t < 40; ++t) changed(t, 0) = -7.0 + static_cast<Real>(t);
    const auto other = sample_sequence(m, sk, changed, {1.0, 5});
    for (std::size_t t = 0; t < cut; ++t) {
      for (std::size_t d = 0; d < kDims; ++d) ASSERT_EQ(base.poses(t, d), other.poses(t, d)) << t;
    }
    bool differs = false;
    for (std::size_t d = 0; d < kDims; ++d) differs |= base.poses(cut, d) != other.poses(cut, d);
    EXPECT_TRUE(differs) << "control at frame " << cut << " has no effect";
  }
}

TEST(Sampler, HigherTemperatureGivesLargerVarianceAcrossSeeds) {
  const MoGlowModel m = toy_model();
  const auto sk = motion::toy_skeleton();
  const Tensor c = constant_control(10, 2.0);
  auto variance = [&](Real temp) {
    std::vector<Real> sum(kDims, 0.0), sq(kDims, 0.0);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto clip = sample_sequence(m, sk, c, {temp, seed});
      for (std::size_t d = 0; d < kDims; ++d) {
        sum[d] += clip.poses(9, d);
        sq[d] += clip.poses(9, d) * clip.poses(9, d);
      }
    }
    std::vector<Real> v(kDims);
    for (std::size_t d = 0; d < kDims; ++d) v[d] = sq[d] / 50 - (sum[d] / 50) * (sum[d] / 50);
    return v;
  };
  const auto hot = variance(1.0);
  const auto cold = variance(0.1);
  for (std::size_t d = 0; d < kDims; ++d) EXPECT_GT(hot[d], cold[d]) << d;
}

TEST(Sampler, RootIntegratesControlExactly) {
  const MoGlowModel m = toy_model();
  const auto sk = motion::toy_skeleton();
  const auto still = sample_sequence(m, sk, constant_control(30, 0.0), {1.0, 2});
  for (std::size_t t = 0; t < 30; ++t) {
    const auto r = motion::root_at(*still.world_root, t);
    EXPECT_EQ(r.x, 0.0);
    EXPECT_EQ(r.z, 0.0);
    EXPECT_EQ(r.heading, 0.0);
  }
  // 100 cm/s at 20 fps is 5 cm per frame along +z.
  const auto walk = sample_sequence(m, sk, constant_control(30, 100.0 / 20.0), {1.0, 2});
  for (std::size_t t = 1; t < 30; ++t) {
    const auto a = motion::root_at(*walk.world_root, t - 1);
    const auto b = motion::root_at(*walk.world_root, t);
    EXPECT_NEAR(b.z - a.z, 5.0, 1e-12);
    EXPECT_EQ(b.x, 0.0);
  }
}

TEST(Sampler, SampleThenInferRecoversTheNoise) {
  const MoGlowModel m = toy_model(11);
  const std::size_t tau = m.config.history;
  SamplerState st = make_sampler_state(m);
  NoiseSource noise({1.0, 4});
  const std::size_t T = 12;
  Tensor x = Tensor::zeros(T + tau, kDims), c = Tensor::zeros(T + tau, 3);
  for (std::size_t k = 0; k < tau; ++k) {
    for (std::size_t d = 0; d < kDims; ++d) x(k, d) = st.pose_history(k, d);
    for (std::size_t j = 0; j < 3; ++j) c(k, j) = st.control_history(k + 1, j);
  }
  std::vector<std::vector<Real>> zs;
  for (std::size_t t = 0; t < T; ++t) {
    const std::vector<Real> ctrl{0.3, -0.2, 0.1 * static_cast<Real>(t)};
    zs.push_back(noise.draw(kDims));
    const Tensor pose = generate_frame(m, st, ctrl, zs.back());
    for (std::size_t d = 0; d < kDims; ++d) x(tau + t, d) = pose[d];
    for (std::size_t j = 0; j < 3; ++j) c(tau + t, j) = ctrl[j];
  }
  const Inference inf = infer_z(m, x, c);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < kDims; ++d) EXPECT_NEAR(inf.z(t, d), zs[t][d], 1e-6);
}

TEST(Sampler, StationaryInAbsoluteFrameIndex) {
  const MoGlowModel m = toy_model();
  SamplerState a = make_sampler_state(m);
  SamplerState b = a;
  b.frame = 1234;
  const std::vector<Real> z(kDims, 0.4);
  const PoseFrame pa = sample_step(m, a, {2.0, 0.0, 0.0}, z);
  const PoseFrame pb = sample_step(m, b, {2.0, 0.0, 0.0}, z);
  EXPECT_TRUE(pa.pose == pb.pose);
  EXPECT_EQ(pb.frame, pa.frame + 1234);
}

TEST(NoiseSource, TemperatureMustBeFiniteAndNonNegative) {
  NoiseSource n({1.0, 0});
  EXPECT_THROW(n.set_temperature(-1.0), ContractError);
  EXPECT_THROW(n.set_temperature(std::nan("")), ContractError);
  n.set_temperature(0.0);
  for (Real v : n.draw(5)) EXPECT_EQ(v, 0.0);
}
