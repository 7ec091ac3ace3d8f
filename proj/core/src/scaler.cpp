#include "moglow/scaler.hpp"

#include <cmath>
#include <string>

#include "moglow/error.hpp"

namespace moglow::motion {

namespace {

Tensor affine_rows(const Tensor& data, const Tensor& mean, const Tensor& stddev, bool inverse) {
  if (data.cols() != mean.cols()) {
    throw DimensionError("scaler has " + std::to_string(mean.cols()) + " dims, data has " +
                         std::to_string(data.cols()));
  }
  Tensor out = data;
  const std::size_t d = data.cols();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      Real& v = out(i, j);
      v = inverse ? v * stddev[j] + mean[j] : (v - mean[j]) / stddev[j];
    }
  }
  return out;
}

void fit_columns(const std::vector<const Tensor*>& blocks, std::size_t dims, Tensor& mean,
                 Tensor& stddev, const char* what) {
  mean = Tensor::zeros(1, dims);
  stddev = Tensor::zeros(1, dims);
  std::size_t count = 0;
  for (const Tensor* b : blocks) {
    for (std::size_t i = 0; i < b->rows(); ++i)
      for (std::size_t j = 0; j < dims; ++j) mean[j] += (*b)(i, j);
    count += b->rows();
  }
  if (count < 2) throw DegenerateDataError(std::string("scaler needs at least 2 ") + what + " frames");
  for (std::size_t j = 0; j < dims; ++j) mean[j] /= static_cast<Real>(count);
  for (const Tensor* b : blocks) {
    for (std::size_t i = 0; i < b->rows(); ++i) {
      for (std::size_t j = 0; j < dims; ++j) {
        const Real dev = (*b)(i, j) - mean[j];
        stddev[j] += dev * dev;
      }
    }
  }
  for (std::size_t j = 0; j < dims; ++j) {
    const Real var = stddev[j] / static_cast<Real>(count);
    if (!(var > 0.0)) {
      throw DegenerateDataError(std::string(what) + " dimension " + std::to_string(j) +
                                " has zero variance");
    }
    stddev[j] = std::sqrt(var);
  }
}

}  // namespace

Scaler Scaler::identity(std::size_t pose_dims, std::size_t control_dims) {
  return {Tensor::zeros(1, pose_dims), Tensor::filled({1, pose_dims}, 1.0),
          Tensor::zeros(1, control_dims), Tensor::filled({1, control_dims}, 1.0)};
}

Tensor Scaler::standardize_poses(const Tensor& poses) const {
  return affine_rows(poses, pose_mean, pose_std, false);
}
Tensor Scaler::unstandardize_poses(const Tensor& poses) const {
  return affine_rows(poses, pose_mean, pose_std, true);
}
Tensor Scaler::standardize_control(const Tensor& control) const {
  return affine_rows(control, control_mean, control_std, false);
}
Tensor Scaler::unstandardize_control(const Tensor& control) const {
  return affine_rows(control, control_mean, control_std, true);
}

Scaler fit_scaler(std::span<const MotionClip> clips) {
  if (clips.empty()) throw DegenerateDataError("cannot fit a scaler to no clips");
  const std::size_t d = clips.front().pose_dims();
  std::vector<const Tensor*> poses;
  std::vector<const Tensor*> controls;
  for (const MotionClip& clip : clips) {
    if (clip.pose_dims() != d) throw DimensionError("clips disagree in pose dimension");
    poses.push_back(&clip.poses);
    if (clip.control) controls.push_back(&*clip.control);
  }
  Scaler s;
  fit_columns(poses, d, s.pose_mean, s.pose_std, "pose");
  if (!controls.empty()) {
    if (controls.size() != clips.size()) {
      throw ContractError("either all clips or none must carry a control track");
    }
    fit_columns(controls, kControlDims, s.control_mean, s.control_std, "control");
  }
  return s;
}

MotionClip apply_scaler(const MotionClip& clip, const Scaler& scaler, ScalerDirection direction) {
  const bool inverse = direction == ScalerDirection::unstandardize;
  MotionClip out = clip;
  out.poses = affine_rows(clip.poses, scaler.pose_mean, scaler.pose_std, inverse);
  if (clip.control) {
    out.control = affine_rows(*clip.control, scaler.control_mean, scaler.control_std, inverse);
  }
  return out;
}

}  // namespace moglow::motion
