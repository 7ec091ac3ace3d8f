#pragma once

#include <span>
#include <vector>

#include "moglow/config.hpp"
#include "moglow/model.hpp"
#include "moglow/motion.hpp"
#include "moglow/scaler.hpp"

namespace moglow::train {

/// Equal-length standardised windows.
struct WindowSet {
  std::vector<Tensor> poses;     // each W × D
  std::vector<Tensor> controls;  // each W × C

  std::size_t size() const noexcept { return poses.size(); }
  std::size_t frames() const;
};

struct PreparedData {
  motion::Scaler scaler;
  WindowSet train;
  WindowSet heldout;
};

/// Holds out the trailing `heldout_fraction` of every clip, augments the
/// training part when configured, fits the scaler on the training frames
/// only and cuts both parts into overlapping windows.
PreparedData prepare_data(std::span<const motion::MotionClip> clips, const TrainConfig& config,
                          std::size_t history);

SequenceBatch gather_batch(const WindowSet& set, std::span<const std::size_t> indices);

/// Per-dimension NLL of N(0, I) on the output frames (index ≥ history) of
/// every window: ½ln 2π + ½·mean(x²).
Real gaussian_baseline_nll(const WindowSet& set, std::size_t history);

}  // namespace moglow::train
