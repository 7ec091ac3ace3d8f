#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "moglow/motion.hpp"

namespace moglow::motion {

enum class HeadingMode {
  velocity,    // direction of travel of the filtered root, transverse axis when slow
  transverse,  // always the body's left-right axis
};

struct RootExtractionOptions {
  Real sigma_frames = 10.0;  // Gaussian filter std; 0 disables filtering
  std::string hip_joint;     // empty selects joint 0
  std::string left_joint;    // transverse axis endpoints, e.g. the hips or shoulders
  std::string right_joint;
  Real min_speed = 1.0;  // cm/s below which the velocity heading is unreliable
  HeadingMode heading = HeadingMode::velocity;
};

/// Truncated (4σ) Gaussian smoothing with weights renormalised at the edges.
std::vector<Real> gaussian_smooth(std::span<const Real> signal, Real sigma);

/// Splits world joint positions (T × 3J) into a floor-level root path, the
/// per-frame control deltas and root-local poses. The returned world root is
/// the integral of the control, so the two agree exactly.
MotionClip clip_from_positions(const Tensor& positions, const Skeleton& skeleton, Real fps,
                               const RootExtractionOptions& options = {});

/// Decimates by an integer factor when possible and resamples linearly
/// otherwise. Control is re-derived from the resampled root path.
MotionClip downsample(const MotionClip& clip, Real target_fps);

using FrameRange = std::pair<std::size_t, std::size_t>;

/// [start, end) windows with stride window·(1 − overlap); partial tails dropped.
std::vector<FrameRange> window_slices(std::size_t frames, std::size_t window, Real overlap);
MotionClip slice_clip(const MotionClip& clip, FrameRange range);

/// Lateral reflection: root-local x negated, left and right joints swapped,
/// lateral and rotation control negated. Exact involution.
MotionClip mirror(const MotionClip& clip);
/// Plays the clip backwards; control becomes the inverse deltas so the
/// reversed root path still integrates.
MotionClip time_reverse(const MotionClip& clip);
/// {original, mirrored, reversed, mirrored + reversed}.
std::vector<MotionClip> augment(const MotionClip& clip);

/// The delta that undoes `c` when applied from the destination root.
ControlFrame inverse_control(const ControlFrame& c);

}  // namespace moglow::motion
