#include <benchmark/benchmark.h>

#include <random>

#include "moglow/config.hpp"
#include "moglow/dataset.hpp"
#include "moglow/sampler.hpp"
#include "moglow/toy_walker.hpp"
#include "moglow/trainer.hpp"

using namespace moglow;

namespace {

// Desk-profile model on the toy skeleton with non-trivial weights.
MoGlowModel desk_model() {
  MoGlowModel m = MoGlowModel::create(ModelConfig::desk(21), 1);
  std::mt19937_64 rng(2);
  std::normal_distribution<Real> n(0.0, 0.05);
  m.for_each_parameter([&](const std::string&, Tensor& t) {
    for (Real& v : t.data()) v += n(rng);
  });
  for (FlowStep& s : m.steps) s.actnorm.initialized = true;
  return m;
}

void BM_SampleStep(benchmark::State& state) {
  const MoGlowModel m = desk_model();
  SamplerState st = make_sampler_state(m);
  NoiseSource noise({1.0, 3});
  for (auto _ : state) {
    const PoseFrame f = sample_step(m, st, {5.0, 0.0, 0.01}, noise.draw(21));
    benchmark::DoNotOptimize(f.pose.ptr());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleStep)->Unit(benchmark::kMillisecond);

void BM_InferWindow(benchmark::State& state) {
  const MoGlowModel m = desk_model();
  std::mt19937_64 rng(4);
  std::normal_distribution<Real> n;
  Tensor x = Tensor::zeros(60, 21), c = Tensor::zeros(60, 3);
  for (Real& v : x.data()) v = n(rng);
  for (Real& v : c.data()) v = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(infer_z(m, x, c).loglik);
}
BENCHMARK(BM_InferWindow)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  motion::ToyWalkerSpec spec;
  spec.seconds = 120.0;
  const std::vector<motion::MotionClip> clips{motion::generate_toy_walker(spec, 5).clip};
  RunProfile p = named_profile("desk", 21);
  p.train.steps = 1'000'000;
  train::Trainer t(MoGlowModel::create(p.model, 1), p, train::prepare_data(clips, p.train, p.model.history));
  for (auto _ : state) benchmark::DoNotOptimize(t.step().train_nll);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond)->Iterations(10);

}  // namespace

BENCHMARK_MAIN();
