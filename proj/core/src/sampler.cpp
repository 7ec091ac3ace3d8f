#include "moglow/sampler.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "moglow/error.hpp"

namespace moglow {

void NoiseSource::set_temperature(Real temperature) {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw ContractError("temperature must be a finite value >= 0");
  }
  temperature_ = temperature;
}

std::vector<Real> NoiseSource::draw(std::size_t dims) {
  std::vector<Real> z(dims);
  for (Real& v : z) v = temperature_ * normal_(engine_);
  return z;
}

namespace {

void shift_in(Tensor& buffer, std::span<const Real> row) {
  const std::size_t w = buffer.cols();
  const std::size_t r = buffer.rows();
  std::memmove(buffer.ptr(), buffer.ptr() + w, (r - 1) * w * sizeof(Real));
  std::copy(row.begin(), row.end(), buffer.ptr() + (r - 1) * w);
}

}  // namespace

SamplerState make_sampler_state(const MoGlowModel& model, const std::optional<Tensor>& init_poses,
                                const std::optional<Tensor>& init_controls,
                                const motion::RootTransform& start) {
  const ModelConfig& cfg = model.config;
  SamplerState state;
  if (init_poses) {
    if (init_poses->rows() != cfg.history || init_poses->cols() != cfg.pose_dims) {
      throw DimensionError("initial poses must be " + std::to_string(cfg.history) + " x " +
                           std::to_string(cfg.pose_dims));
    }
    state.pose_history = model.scaler.standardize_poses(*init_poses);
  } else {
    state.pose_history = Tensor::zeros(cfg.history, cfg.pose_dims);
  }
  Tensor raw_controls = Tensor::zeros(cfg.history + 1, cfg.control_dims);
  if (init_controls) {
    if (init_controls->rows() != cfg.history || init_controls->cols() != cfg.control_dims) {
      throw DimensionError("initial control must be " + std::to_string(cfg.history) + " x " +
                           std::to_string(cfg.control_dims));
    }
    std::copy_n(init_controls->ptr(), init_controls->size(), raw_controls.ptr() + cfg.control_dims);
    std::copy_n(init_controls->ptr(), cfg.control_dims, raw_controls.ptr());
  }
  state.control_history = model.scaler.standardize_control(raw_controls);
  for (std::size_t n = 0; n < cfg.steps; ++n) {
    state.coupling.push_back(flow::CouplingState::zeros(1, cfg.hidden));
  }
  state.root = start;
  return state;
}

Tensor generate_frame(const MoGlowModel& model, SamplerState& state,
                      std::span<const Real> control_standardized, std::span<const Real> noise) {
  const ModelConfig& cfg = model.config;
  if (!state.ready()) throw ContractError("sampler state is not initialised");
  if (control_standardized.size() != cfg.control_dims || noise.size() != cfg.pose_dims) {
    throw DimensionError("generate_frame: control/noise widths do not match the model");
  }
  shift_in(state.control_history, control_standardized);
  const Tensor cond_row =
      build_condition_vector(state.pose_history, state.control_history, cfg.history);

  ad::Graph g(false);
  ad::Binding bind(g, false);
  ad::Var cond = g.constant(cond_row);
  ad::Var h = g.constant(Tensor::row(std::vector<Real>(noise.begin(), noise.end())));
  for (std::size_t n = model.steps.size(); n-- > 0;) {
    const FlowStep& step = model.steps[n];
    h = flow::coupling_apply(bind, step.coupling, h, cond, 1, state.coupling[n],
                             flow::Direction::generate)
            .y;
    h = flow::apply(bind, step.linear, h, flow::Direction::generate).y;
    h = flow::apply(bind, step.actnorm, h, flow::Direction::generate).y;
  }
  Tensor pose = h.value();
  if (!pose.all_finite()) {
    throw NumericError("non-finite pose generated at frame " + std::to_string(state.frame));
  }
  shift_in(state.pose_history, pose.data());
  ++state.frame;
  return pose;
}

PoseFrame sample_step(const MoGlowModel& model, SamplerState& state,
                      const motion::ControlFrame& control, std::span<const Real> noise) {
  if (!std::isfinite(control.forward) || !std::isfinite(control.lateral) ||
      !std::isfinite(control.rotation)) {
    throw NumericError("control frame contains non-finite values");
  }
  const Tensor raw = Tensor::row({control.forward, control.lateral, control.rotation});
  const Tensor standardized = model.scaler.standardize_control(raw);
  const std::size_t index = state.frame;
  Tensor pose = generate_frame(model, state, standardized.data(), noise);
  state.root = motion::integrate(state.root, control);
  return {index, model.scaler.unstandardize_poses(pose), state.root};
}

motion::MotionClip sample_sequence(const MoGlowModel& model, const motion::Skeleton& skeleton,
                                   const Tensor& control, const NoiseSpec& noise,
                                   const std::optional<Tensor>& init_poses,
                                   const std::optional<Tensor>& init_controls) {
  if (control.cols() != motion::kControlDims) throw DimensionError("control must be T x 3");
  const std::size_t frames = control.rows();
  if (frames == 0) throw ContractError("cannot sample an empty control sequence");
  SamplerState state = make_sampler_state(model, init_poses, init_controls);
  NoiseSource source(noise);
  source.set_temperature(noise.temperature);

  motion::MotionClip clip;
  clip.fps = model.config.fps;
  clip.skeleton = skeleton;
  clip.poses = Tensor::zeros(frames, model.config.pose_dims);
  clip.control = control;
  clip.world_root = Tensor::zeros(frames, 3);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::vector<Real> z = source.draw(model.config.pose_dims);
    PoseFrame out = sample_step(model, state, motion::control_at(control, t), z);
    std::copy_n(out.pose.ptr(), out.pose.size(), clip.poses.ptr() + t * clip.pose_dims());
    motion::set_root(*clip.world_root, t, out.root);
  }
  return clip;
}

}  // namespace moglow
