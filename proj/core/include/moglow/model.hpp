#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "moglow/autodiff.hpp"
#include "moglow/flow_steps.hpp"
#include "moglow/scaler.hpp"

namespace moglow {

/// Architecture hyperparameters.
struct ModelConfig {
  std::size_t pose_dims = 21;
  std::size_t control_dims = 3;
  std::size_t steps = 4;     // N
  std::size_t history = 4;   // τ
  std::size_t hidden = 64;   // LSTM width inside each coupling network
  Real scale_floor = 0.05;   // ε
  Real dropout_rate = 0.95;  // probability of masking a history frame while training
  Real fps = 20.0;

  /// N = 16, τ = 10, two 512-wide LSTM layers, dropout 0.95.
  static ModelConfig paper(std::size_t pose_dims, std::size_t control_dims = 3);
  /// N = 4, τ = 4, width 64, dropout 0.95.
  static ModelConfig desk(std::size_t pose_dims, std::size_t control_dims = 3);

  /// Pass-through half of every coupling; empty for D = 1, where the
  /// coupling is driven by the conditioning alone.
  std::size_t lo_dims() const { return pose_dims / 2; }
  std::size_t hi_dims() const { return pose_dims - lo_dims(); }
  /// Width of the flattened [x_{t−τ} … x_{t−1}, c_{t−τ} … c_t] vector.
  std::size_t condition_dims() const { return history * pose_dims + (history + 1) * control_dims; }
  void validate() const;
};

struct FlowStep {
  flow::ActNorm actnorm;
  flow::LinearLU linear;
  flow::CouplingNet coupling;
};

/// N stacked steps plus the standardisation the data was trained under.
struct MoGlowModel {
  ModelConfig config;
  std::vector<FlowStep> steps;
  motion::Scaler scaler;

  /// Random rotations for the linear maps, identity couplings, actnorm
  /// awaiting data-dependent initialisation.
  static MoGlowModel create(const ModelConfig& config, std::uint64_t seed);

  bool initialized() const;
  /// Visits every trainable tensor with a stable dotted name.
  void for_each_parameter(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each_parameter(const std::function<void(const std::string&, const Tensor&)>& fn) const;
  std::size_t parameter_count() const;
};

/// ln N(z; 0, I) = −D/2·ln 2π − ‖z‖²/2. Throws NumericError on non-finite input.
Real gaussian_logpdf(std::span<const Real> z);
/// Σ over rows of ln N(row; 0, I), as a graph node.
ad::Var gaussian_logpdf_rows(ad::Var z);

/// Flattens τ pose rows and τ+1 control rows (standardised units) into one
/// 1×(τD + (τ+1)C) vector: [x_{t−τ}, …, x_{t−1}, c_{t−τ}, …, c_t].
Tensor build_condition_vector(const Tensor& pose_history, const Tensor& control_history,
                              std::size_t history);

/// Zeroes each history row independently with probability `rate`. Kept rows
/// are not rescaled.
Tensor apply_data_dropout(const Tensor& history, Real rate, std::mt19937_64& rng);

/// Uniform draw in [0, 1) from the top 53 bits of one engine output.
Real uniform01(std::mt19937_64& rng);

/// `streams` parallel standardised sequences of equal length, frame-major:
/// row f·streams + s holds frame f of sequence s.
struct SequenceBatch {
  std::size_t streams = 0;
  std::size_t frames = 0;
  Tensor poses;     // (frames·streams) × D
  Tensor controls;  // (frames·streams) × C

  static SequenceBatch single(const Tensor& poses, const Tensor& controls);
  static SequenceBatch stack(std::span<const Tensor> poses, std::span<const Tensor> controls);
};

/// Keep (1) / drop (0) flags per (output frame, stream, history slot):
/// element [(f·streams + s)·τ + k].
std::vector<std::uint8_t> draw_history_masks(std::size_t output_frames, std::size_t streams,
                                             std::size_t history, Real rate, std::mt19937_64& rng);

/// Conditioning rows for every output frame t ∈ [τ, frames) of a batch.
Tensor batch_conditions(const SequenceBatch& batch, std::size_t history,
                        const std::vector<std::uint8_t>* keep_mask);

struct LikelihoodGraph {
  ad::Var z;        // ((frames−τ)·streams) × D
  ad::Var loglik;   // 1×1, summed over every output frame and stream
  std::size_t output_frames = 0;
};

/// Exact log-likelihood of frames τ… of every sequence given the first τ
/// frames and the control, with per-window zero recurrent state. Runs the
/// flow step-major so each step's dense maps see all frames at once.
LikelihoodGraph sequence_log_likelihood(ad::Binding& bind, const MoGlowModel& model,
                                        const SequenceBatch& batch,
                                        const std::vector<std::uint8_t>* keep_mask = nullptr);

/// Initialises every actnorm layer, in order, on the statistics of its input
/// over all output frames of `batch`.
void initialize_actnorm(MoGlowModel& model, const SequenceBatch& batch);

struct Inference {
  Tensor z;       // (T−τ) × D
  Real loglik = 0.0;
};

/// Maps a standardised sequence x (T×D) with control c (T×C) to latents.
/// When `dropout_rng` is given, history frames are masked at the model's
/// dropout rate.
Inference infer_z(const MoGlowModel& model, const Tensor& x, const Tensor& c,
                  std::mt19937_64* dropout_rng = nullptr);

}  // namespace moglow
