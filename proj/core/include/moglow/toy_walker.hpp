#pragma once

#include <cstdint>
#include <vector>

#include "moglow/motion.hpp"
#include "moglow/preprocess.hpp"

namespace moglow::motion {

/// One constant-target stretch of the locomotion profile.
struct ToySegment {
  Real seconds = 1.0;
  Real speed = 0.0;      // cm/s along the heading
  Real turn_rate = 0.0;  // rad/s
  Real lateral = 0.0;    // cm/s toward root-local +x (sidestep)
};

struct ToyWalkerSpec {
  Real seconds = 60.0;
  Real fps = 20.0;
  /// Explicit profile; when empty a random one is drawn from the seed.
  std::vector<ToySegment> segments;
  Real max_speed = 100.0;
  Real max_turn_rate = 1.0;       // rad/s
  Real stand_probability = 0.25;  // chance that a random segment is a stand-still
  Real sidestep_probability = 0.15;
  Real max_lateral = 30.0;        // cm/s
  Real min_segment = 2.0;         // seconds
  Real max_segment = 6.0;
  Real acceleration = 150.0;      // cm/s², speed ramps linearly toward its target
  Real turn_acceleration = 2.0;   // rad/s²
  Real cadence = 2.0;             // footfalls per second over both feet
  Real swing_fraction = 0.4;      // share of one foot's cycle spent in the air
};

/// Ground truth of the generated gait as seen by a contact detector.
struct ToyGroundTruth {
  std::vector<int> feet;  // heel joint indices
  /// Per foot: maximal runs of frames whose heel moves at most 1e-9 cm in
  /// world space over the frame's central difference, runs shorter than 2
  /// dropped.
  std::vector<std::vector<FrameRange>> planted;
  std::size_t step_count = 0;
  Real mean_duration = 0.0;  // seconds
  Real std_duration = 0.0;   // population
};

struct ToyWalker {
  MotionClip clip;
  ToyGroundTruth truth;
};

/// hip, chest, head, left_knee, left_heel, right_knee, right_heel; left is +x.
Skeleton toy_skeleton();

/// Deterministic biped driven by a speed/turn profile. Stance heels are
/// still in world space; swings follow a smooth arc to a target
/// placed ahead along the future root path.
ToyWalker generate_toy_walker(const ToyWalkerSpec& spec, std::uint64_t seed);

}  // namespace moglow::motion
