#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "moglow/model.hpp"
#include "moglow/motion.hpp"

namespace moglow {

/// Latent noise policy: z ~ N(0, temperature²·I) from a seeded engine.
struct NoiseSpec {
  Real temperature = 1.0;
  std::uint64_t seed = 0;
};

/// Draws scaled standard-normal vectors reproducibly.
class NoiseSource {
 public:
  explicit NoiseSource(const NoiseSpec& spec) : temperature_(spec.temperature), engine_(spec.seed) {}

  /// Throws ContractError for a negative or non-finite temperature.
  void set_temperature(Real temperature);
  Real temperature() const noexcept { return temperature_; }
  std::vector<Real> draw(std::size_t dims);

 private:
  Real temperature_;
  std::mt19937_64 engine_;
  std::normal_distribution<Real> normal_{0.0, 1.0};
};

/// Autoregressive context of one stream.
struct SamplerState {
  Tensor pose_history;     // τ × D, standardised, oldest first
  Tensor control_history;  // (τ+1) × C, standardised; last row is the newest control
  std::vector<flow::CouplingState> coupling;  // one per flow step
  motion::RootTransform root;
  std::size_t frame = 0;

  bool ready() const { return !coupling.empty(); }
};

/// Fresh state: history from `init_poses` (τ×D, raw units) or the training
/// mean pose, control history from `init_controls` (τ×C raw) or zero
/// motion, all recurrent states zero.
SamplerState make_sampler_state(const MoGlowModel& model,
                                const std::optional<Tensor>& init_poses = std::nullopt,
                                const std::optional<Tensor>& init_controls = std::nullopt,
                                const motion::RootTransform& start = {});

/// One generative pass in standardised units: pushes `control` into the
/// control history, maps `noise` through the inverse flow, pushes the new
/// pose into the pose history and advances every coupling state.
Tensor generate_frame(const MoGlowModel& model, SamplerState& state,
                      std::span<const Real> control_standardized, std::span<const Real> noise);

struct PoseFrame {
  std::size_t frame = 0;
  Tensor pose;  // 1×D, raw units (root-local cm)
  motion::RootTransform root;
};

/// Causal step in raw units: consumes exactly one control frame and emits
/// one pose. The world root is advanced by integrating the control.
PoseFrame sample_step(const MoGlowModel& model, SamplerState& state,
                      const motion::ControlFrame& control, std::span<const Real> noise);

/// Runs sample_step over every row of `control` (T×3, raw units).
motion::MotionClip sample_sequence(const MoGlowModel& model, const motion::Skeleton& skeleton,
                                   const Tensor& control, const NoiseSpec& noise,
                                   const std::optional<Tensor>& init_poses = std::nullopt,
                                   const std::optional<Tensor>& init_controls = std::nullopt);

}  // namespace moglow
