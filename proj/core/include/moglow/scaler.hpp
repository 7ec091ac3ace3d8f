#pragma once

#include <span>
#include <vector>

#include "moglow/motion.hpp"

namespace moglow::motion {

/// Per-dimension standardisation statistics for poses and control.
struct Scaler {
  Tensor pose_mean;     // 1×D
  Tensor pose_std;      // 1×D
  Tensor control_mean;  // 1×C (empty when no control was fitted)
  Tensor control_std;   // 1×C

  static Scaler identity(std::size_t pose_dims, std::size_t control_dims);

  /// Rows of `data` mapped to (x − mean) / std, or back when `inverse`.
  Tensor standardize_poses(const Tensor& poses) const;
  Tensor unstandardize_poses(const Tensor& poses) const;
  Tensor standardize_control(const Tensor& control) const;
  Tensor unstandardize_control(const Tensor& control) const;
};

enum class ScalerDirection { standardize, unstandardize };

/// Fits means and population standard deviations over every frame of
/// `clips`. Throws DegenerateDataError on a zero-variance dimension.
Scaler fit_scaler(std::span<const MotionClip> clips);

/// Standardises (or restores) poses and control; the world root is untouched.
MotionClip apply_scaler(const MotionClip& clip, const Scaler& scaler, ScalerDirection direction);

}  // namespace moglow::motion
