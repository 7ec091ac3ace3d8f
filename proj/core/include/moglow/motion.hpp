#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "moglow/tensor.hpp"

namespace moglow::motion {

using Vec3 = std::array<Real, 3>;

/// Joint hierarchy in topological order (parent index < joint index).
struct Skeleton {
  std::vector<std::string> names;
  std::vector<int> parents;   // −1 for the root joint
  std::vector<Vec3> offsets;  // rest offset from the parent (cm)
  /// mirror[j] is the lateral counterpart of joint j (j itself for centre joints).
  std::optional<std::vector<int>> mirror;

  std::size_t joints() const { return names.size(); }
  std::size_t pose_dims() const { return 3 * names.size(); }
  /// Throws ContractError when any invariant is broken.
  void validate() const;
  /// −1 when no joint has this name.
  int find(const std::string& name) const;
  Real bone_length(std::size_t joint) const;
};

/// Per-frame root motion, expressed in the previous frame's root coordinates.
struct ControlFrame {
  Real forward = 0.0;   // cm / frame along the heading
  Real lateral = 0.0;   // cm / frame, +x of the root frame
  Real rotation = 0.0;  // rad / frame about the up axis
};
inline constexpr std::size_t kControlDims = 3;

/// Floor-projected root: position on the ground plane and heading about +y.
/// Heading 0 faces +z; local +x maps to world (cos θ, −sin θ) on (x, z).
struct RootTransform {
  Real x = 0.0;
  Real z = 0.0;
  Real heading = 0.0;
};

/// Applies one control delta to a root.
RootTransform integrate(const RootTransform& root, const ControlFrame& control);
/// Delta that takes `from` to `to`, in `from`'s coordinates.
ControlFrame relative(const RootTransform& from, const RootTransform& to);

/// Root-local point → world point (y untouched).
Vec3 to_world(const RootTransform& root, const Vec3& local);
Vec3 to_local(const RootTransform& root, const Vec3& world);

/// Fixed-rate sequence of root-local joint positions.
///
/// poses is T×(3J); control, when present, is T×3 rows of
/// (forward, lateral, rotation); world_root is T×3 rows of (x, z, heading).
/// Row 0 of control is not used for integration: world_root[t] =
/// integrate(world_root[t−1], control[t]).
struct MotionClip {
  Real fps = 20.0;
  Skeleton skeleton;
  Tensor poses;
  std::optional<Tensor> control;
  std::optional<Tensor> world_root;

  std::size_t frames() const { return poses.rows(); }
  std::size_t pose_dims() const { return poses.cols(); }
  void validate() const;
};

ControlFrame control_at(const Tensor& control, std::size_t t);
RootTransform root_at(const Tensor& world_root, std::size_t t);
void set_control(Tensor& control, std::size_t t, const ControlFrame& c);
void set_root(Tensor& world_root, std::size_t t, const RootTransform& r);

/// Left fold of control rows 1..T−1 starting from `start` (row 0 = start).
Tensor integrate_control(const Tensor& control, const RootTransform& start = {});
/// Control rows from consecutive roots; row 0 is zero.
Tensor control_from_roots(const Tensor& world_root);

/// World joint positions T×(3J) reconstructed from root-local poses and the
/// world root track. Throws ContractError when world_root is absent.
Tensor world_positions(const MotionClip& clip);

}  // namespace moglow::motion
