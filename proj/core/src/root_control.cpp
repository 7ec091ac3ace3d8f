#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "moglow/error.hpp"
#include "moglow/preprocess.hpp"

namespace moglow::motion {

namespace {

Real wrap_angle(Real a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}

int joint_or(const Skeleton& skeleton, const std::string& name, int fallback) {
  if (name.empty()) return fallback;
  const int j = skeleton.find(name);
  if (j < 0) throw ContractError("skeleton has no joint named '" + name + "'");
  return j;
}

std::vector<Real> column(const Tensor& positions, std::size_t col) {
  std::vector<Real> out(positions.rows());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = positions(t, col);
  return out;
}

}  // namespace

std::vector<Real> gaussian_smooth(std::span<const Real> signal, Real sigma) {
  if (!(sigma >= 0.0)) throw ContractError("filter sigma must be >= 0");
  std::vector<Real> out(signal.begin(), signal.end());
  if (sigma == 0.0 || signal.empty()) return out;
  const long radius = static_cast<long>(std::ceil(4.0 * sigma));
  std::vector<Real> kernel(2 * radius + 1);
  for (long k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
  }
  const long n = static_cast<long>(signal.size());
  for (long t = 0; t < n; ++t) {
    Real acc = 0.0;
    Real weight = 0.0;
    for (long k = std::max(-radius, -t); k <= std::min(radius, n - 1 - t); ++k) {
      acc += kernel[k + radius] * signal[t + k];
      weight += kernel[k + radius];
    }
    out[t] = acc / weight;
  }
  return out;
}

MotionClip clip_from_positions(const Tensor& positions, const Skeleton& skeleton, Real fps,
                               const RootExtractionOptions& options) {
  skeleton.validate();
  const std::size_t frames = positions.rows();
  const std::size_t joints = skeleton.joints();
  if (frames < 2) throw ContractError("root extraction needs at least 2 frames");
  if (positions.cols() != 3 * joints) {
    throw DimensionError("positions have " + std::to_string(positions.cols()) +
                         " columns, skeleton needs " + std::to_string(3 * joints));
  }
  if (!(fps > 0.0)) throw ContractError("fps must be positive");

  const int hip = joint_or(skeleton, options.hip_joint, 0);
  const int left = joint_or(skeleton, options.left_joint, -1);
  const int right = joint_or(skeleton, options.right_joint, -1);
  const bool has_axis = left >= 0 && right >= 0;
  if (options.heading == HeadingMode::transverse && !has_axis) {
    throw ContractError("transverse heading needs left and right joints");
  }

  const std::vector<Real> rx = gaussian_smooth(column(positions, 3 * hip), options.sigma_frames);
  const std::vector<Real> rz =
      gaussian_smooth(column(positions, 3 * hip + 2), options.sigma_frames);
  std::vector<Real> ax;
  std::vector<Real> az;
  if (has_axis) {
    std::vector<Real> dx(frames);
    std::vector<Real> dz(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      dx[t] = positions(t, 3 * left) - positions(t, 3 * right);
      dz[t] = positions(t, 3 * left + 2) - positions(t, 3 * right + 2);
    }
    ax = gaussian_smooth(dx, options.sigma_frames);
    az = gaussian_smooth(dz, options.sigma_frames);
  }

  Tensor roots = Tensor::zeros(frames, 3);
  Real heading = 0.0;
  bool have_heading = false;
  std::size_t first_heading = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t a = t == 0 ? 0 : t - 1;
    const std::size_t b = t + 1 == frames ? t : t + 1;
    const Real span = static_cast<Real>(b - a) / fps;
    const Real vx = (rx[b] - rx[a]) / span;
    const Real vz = (rz[b] - rz[a]) / span;
    std::optional<Real> raw;
    if (options.heading == HeadingMode::velocity && std::hypot(vx, vz) >= options.min_speed) {
      raw = std::atan2(vx, vz);
    } else if (has_axis && std::hypot(ax[t], az[t]) > 0.0) {
      raw = std::atan2(-az[t], ax[t]);
    }
    if (raw) {
      if (!have_heading) first_heading = t;
      heading = have_heading ? heading + wrap_angle(*raw - heading) : *raw;
      have_heading = true;
    }
    roots(t, 0) = rx[t];
    roots(t, 1) = rz[t];
    roots(t, 2) = heading;
  }
  // Frames before the first reliable heading adopt it.
  for (std::size_t t = 0; t < first_heading; ++t) roots(t, 2) = roots(first_heading, 2);

  MotionClip clip;
  clip.fps = fps;
  clip.skeleton = skeleton;
  clip.control = control_from_roots(roots);
  clip.world_root = integrate_control(*clip.control, root_at(roots, 0));
  clip.poses = Tensor::zeros(frames, 3 * joints);
  for (std::size_t t = 0; t < frames; ++t) {
    const RootTransform root = root_at(*clip.world_root, t);
    for (std::size_t j = 0; j < joints; ++j) {
      const Vec3 local =
          to_local(root, {positions(t, 3 * j), positions(t, 3 * j + 1), positions(t, 3 * j + 2)});
      for (int k = 0; k < 3; ++k) clip.poses(t, 3 * j + k) = local[k];
    }
  }
  return clip;
}

}  // namespace moglow::motion
