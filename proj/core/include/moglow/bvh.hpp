#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moglow/motion.hpp"

namespace moglow::motion {

enum class BvhChannel { x_position, y_position, z_position, x_rotation, y_rotation, z_rotation };

struct BvhJoint {
  std::string name;
  int parent = -1;
  Vec3 offset{};
  std::vector<BvhChannel> channels;  // in file order
  std::size_t channel_offset = 0;    // first column of this joint in a frame row
  bool end_site = false;
};

/// Parsed BVH file: hierarchy plus the raw channel matrix (degrees for
/// rotations, file units for positions).
struct BvhDocument {
  std::vector<BvhJoint> joints;  // depth-first file order, end sites included
  Real frame_time = 0.0;
  Tensor frames;  // F × channel_count

  std::size_t channel_count() const;
  Real fps() const { return 1.0 / frame_time; }
  /// Skeleton over every joint, end sites named "<parent>_end". No mirror table.
  Skeleton skeleton() const;
};

/// Throws ParseError carrying the offending line number.
BvhDocument parse_bvh(std::string_view text);
BvhDocument load_bvh(const std::filesystem::path& path);

/// World joint positions for one frame row: 1 × 3J. Rotation channels are
/// composed in file order (intrinsic), translations add to the offset.
Tensor forward_kinematics(const BvhDocument& doc, std::span<const Real> frame);
/// Every frame: F × 3J.
Tensor bvh_positions(const BvhDocument& doc);

}  // namespace moglow::motion
