#pragma once

#include <string>
#include <vector>

#include "moglow/tensor.hpp"

namespace moglow::motion {

/// Named synthetic steering signals, T × 3 per-frame deltas:
///   still     standing for the whole duration
///   straight  100 cm/s forward
///   turn      80 cm/s with a 0.5 rad/s left turn
///   stop      alternating 5 s walking at 100 cm/s and 5 s standing
///   mixed     straight, turn right, stop, sidestep, turn left, in 6 s blocks
Tensor synthetic_control(const std::string& name, Real seconds, Real fps);
const std::vector<std::string>& synthetic_control_names();

/// Rows of "t, forward, lateral, rotation" with rates in cm/s and rad/s, one
/// row per output frame. A non-numeric first line is taken as a header.
Tensor parse_control_csv(const std::string& text, Real fps);

}  // namespace moglow::motion
