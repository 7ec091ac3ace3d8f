#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moglow/keyvalue.hpp"
#include "moglow/motion.hpp"
#include "moglow/preprocess.hpp"

namespace moglow::eval {

using motion::FrameRange;

/// Maximal runs of frames with speed < v_tol, runs shorter than
/// `min_frames` discarded.
std::vector<FrameRange> detect_steps(std::span<const Real> speed, Real v_tol,
                                     std::size_t min_frames = 2);

/// Horizontal (x, z) speed of one joint in cm/s from world positions
/// (T × 3J): central differences inside, one-sided at the ends.
std::vector<Real> horizontal_speed(const Tensor& world_positions, std::size_t joint, Real fps);

struct FootstepOptions {
  Real tol_step = 1.0;  // cm/s grid spacing
  Real tol_max = 60.0;  // last grid point
  std::size_t min_frames = 2;
};

struct DurationStats {
  Real mean = 0.0;              // seconds
  std::optional<Real> stddev;   // population; needs two steps
  std::size_t count = 0;
};

struct FootstepReport {
  std::vector<Real> tolerances;     // cm/s
  std::vector<std::size_t> counts;  // f_est per tolerance, summed over feet
  std::size_t plateau = 0;          // max count
  Real v95 = 0.0;
  /// Steps per foot at the v95 tolerance.
  std::vector<std::vector<FrameRange>> steps;
  DurationStats durations;
};

/// f_est(v_tol) over {tol_step, 2·tol_step, …, tol_max} for the listed foot
/// joints, with v95 and step durations taken at v95. Needs a world root.
FootstepReport footstep_curve(const motion::MotionClip& clip, std::span<const int> feet,
                              const FootstepOptions& options = {});

/// Smallest grid tolerance whose count reaches 95% of the maximum. Throws
/// UndefinedResultError on an all-zero curve.
Real v95(std::span<const Real> tolerances, std::span<const std::size_t> counts);

/// Throws UndefinedResultError without intervals.
DurationStats step_duration_stats(std::span<const FrameRange> steps, Real fps);

/// sqrt(mean over joints with a parent and frames of (|p_child − p_parent| − rest)²).
Real bone_length_rmse(const motion::MotionClip& clip);

/// Mean world speed (cm/s) over joints and frames.
Real stillness_metric(const motion::MotionClip& clip);

/// Resolves "heels", "toes" or a comma-separated joint list to indices.
std::vector<int> resolve_feet(const motion::Skeleton& skeleton, const std::string& spec);

/// Canonical key-value summary.
KeyValue report_keyvalue(const FootstepReport& report, Real bone_rmse, Real stillness);
/// "v_tol,f_est" lines.
std::string curve_csv(const FootstepReport& report);
/// Footstep count against tolerance as a standalone SVG line chart.
std::string curve_svg(const FootstepReport& report, const std::string& title);

}  // namespace moglow::eval
