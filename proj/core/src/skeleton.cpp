#include <cmath>
#include <string>

#include "moglow/error.hpp"
#include "moglow/motion.hpp"

namespace moglow::motion {

void Skeleton::validate() const {
  const std::size_t j = names.size();
  if (parents.size() != j || offsets.size() != j) {
    throw ContractError("skeleton tables disagree in length");
  }
  for (std::size_t i = 0; i < j; ++i) {
    if (parents[i] >= static_cast<int>(i) || parents[i] < -1) {
      throw ContractError("joint " + names[i] + " has parent index " + std::to_string(parents[i]) +
                          " (must be -1 or smaller than its own index)");
    }
  }
  if (mirror) {
    if (mirror->size() != j) throw ContractError("mirror table length differs from joint count");
    for (std::size_t i = 0; i < j; ++i) {
      const int m = (*mirror)[i];
      if (m < 0 || m >= static_cast<int>(j) || (*mirror)[m] != static_cast<int>(i)) {
        throw ContractError("mirror table is not an involution at joint " + names[i]);
      }
    }
  }
}

int Skeleton::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

Real Skeleton::bone_length(std::size_t joint) const {
  const Vec3& o = offsets.at(joint);
  return std::sqrt(o[0] * o[0] + o[1] * o[1] + o[2] * o[2]);
}

RootTransform integrate(const RootTransform& root, const ControlFrame& control) {
  const Real c = std::cos(root.heading);
  const Real s = std::sin(root.heading);
  return {root.x + control.lateral * c + control.forward * s,
          root.z - control.lateral * s + control.forward * c, root.heading + control.rotation};
}

ControlFrame relative(const RootTransform& from, const RootTransform& to) {
  const Real c = std::cos(from.heading);
  const Real s = std::sin(from.heading);
  const Real dx = to.x - from.x;
  const Real dz = to.z - from.z;
  return {dx * s + dz * c, dx * c - dz * s, to.heading - from.heading};
}

Vec3 to_world(const RootTransform& root, const Vec3& local) {
  const Real c = std::cos(root.heading);
  const Real s = std::sin(root.heading);
  return {root.x + local[0] * c + local[2] * s, local[1], root.z - local[0] * s + local[2] * c};
}

Vec3 to_local(const RootTransform& root, const Vec3& world) {
  const Real c = std::cos(root.heading);
  const Real s = std::sin(root.heading);
  const Real dx = world[0] - root.x;
  const Real dz = world[2] - root.z;
  return {dx * c - dz * s, world[1], dx * s + dz * c};
}

void MotionClip::validate() const {
  skeleton.validate();
  if (poses.cols() != skeleton.pose_dims()) {
    throw ContractError("clip pose width " + std::to_string(poses.cols()) + " != 3 x " +
                        std::to_string(skeleton.joints()) + " joints");
  }
  if (!(fps > 0.0)) throw ContractError("clip fps must be positive");
  if (control && (control->rows() != frames() || control->cols() != kControlDims)) {
    throw ContractError("control track must be T x 3");
  }
  if (world_root && (world_root->rows() != frames() || world_root->cols() != 3)) {
    throw ContractError("world root track must be T x 3");
  }
}

ControlFrame control_at(const Tensor& control, std::size_t t) {
  return {control(t, 0), control(t, 1), control(t, 2)};
}

RootTransform root_at(const Tensor& world_root, std::size_t t) {
  return {world_root(t, 0), world_root(t, 1), world_root(t, 2)};
}

void set_control(Tensor& control, std::size_t t, const ControlFrame& c) {
  control(t, 0) = c.forward;
  control(t, 1) = c.lateral;
  control(t, 2) = c.rotation;
}

void set_root(Tensor& world_root, std::size_t t, const RootTransform& r) {
  world_root(t, 0) = r.x;
  world_root(t, 1) = r.z;
  world_root(t, 2) = r.heading;
}

Tensor integrate_control(const Tensor& control, const RootTransform& start) {
  const std::size_t frames = control.rows();
  Tensor roots = Tensor::zeros(frames, 3);
  if (frames == 0) return roots;
  RootTransform r = start;
  set_root(roots, 0, r);
  for (std::size_t t = 1; t < frames; ++t) {
    r = integrate(r, control_at(control, t));
    set_root(roots, t, r);
  }
  return roots;
}

Tensor control_from_roots(const Tensor& world_root) {
  const std::size_t frames = world_root.rows();
  Tensor control = Tensor::zeros(frames, kControlDims);
  for (std::size_t t = 1; t < frames; ++t) {
    set_control(control, t, relative(root_at(world_root, t - 1), root_at(world_root, t)));
  }
  return control;
}

Tensor world_positions(const MotionClip& clip) {
  if (!clip.world_root) throw ContractError("clip has no world root track");
  const std::size_t frames = clip.frames();
  const std::size_t joints = clip.pose_dims() / 3;
  Tensor out = Tensor::zeros(frames, clip.pose_dims());
  for (std::size_t t = 0; t < frames; ++t) {
    const RootTransform root = root_at(*clip.world_root, t);
    for (std::size_t j = 0; j < joints; ++j) {
      const Vec3 w = to_world(root, {clip.poses(t, 3 * j), clip.poses(t, 3 * j + 1),
                                     clip.poses(t, 3 * j + 2)});
      out(t, 3 * j) = w[0];
      out(t, 3 * j + 1) = w[1];
      out(t, 3 * j + 2) = w[2];
    }
  }
  return out;
}

}  // namespace moglow::motion
