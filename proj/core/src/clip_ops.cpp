#include <cmath>
#include <string>

#include "moglow/error.hpp"
#include "moglow/preprocess.hpp"

namespace moglow::motion {

namespace {

// Ensures a clip carries both tracks when it carries either.
void complete_tracks(MotionClip& clip) {
  if (clip.control && !clip.world_root) {
    clip.world_root = integrate_control(*clip.control);
  } else if (clip.world_root && !clip.control) {
    clip.control = control_from_roots(*clip.world_root);
  }
}

Tensor rows_of(const Tensor& src, std::span<const std::size_t> rows) {
  Tensor out = Tensor::zeros(rows.size(), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(src.ptr() + rows[i] * src.cols(), src.cols(), out.ptr() + i * src.cols());
  }
  return out;
}

ControlFrame compose(const ControlFrame& first, const ControlFrame& second) {
  return relative(RootTransform{}, integrate(integrate(RootTransform{}, first), second));
}

}  // namespace

ControlFrame inverse_control(const ControlFrame& c) {
  const Real s = std::sin(c.rotation);
  const Real k = std::cos(c.rotation);
  return {-(c.lateral * s + c.forward * k), -(c.lateral * k - c.forward * s), -c.rotation};
}

MotionClip downsample(const MotionClip& clip, Real target_fps) {
  if (!(target_fps > 0.0)) throw ContractError("target fps must be positive");
  if (target_fps > clip.fps) {
    throw ContractError("cannot downsample " + std::to_string(clip.fps) + " fps to " +
                        std::to_string(target_fps) + " fps");
  }
  MotionClip src = clip;
  complete_tracks(src);
  const Real ratio = src.fps / target_fps;
  const long factor = std::lround(ratio);
  MotionClip out;
  out.fps = target_fps;
  out.skeleton = src.skeleton;
  const std::size_t frames = src.frames();

  if (std::abs(ratio - static_cast<Real>(factor)) < 1e-9) {
    std::vector<std::size_t> keep;
    for (std::size_t t = 0; t < frames; t += static_cast<std::size_t>(factor)) keep.push_back(t);
    out.poses = rows_of(src.poses, keep);
    if (src.world_root) {
      const Tensor roots = rows_of(*src.world_root, keep);
      Tensor control = control_from_roots(roots);
      ControlFrame first = control_at(*src.control, 0);
      ControlFrame acc = first;
      for (long k = 1; k < factor; ++k) acc = compose(acc, first);
      if (!keep.empty()) set_control(control, 0, acc);
      out.control = control;
      out.world_root = integrate_control(control, keep.empty() ? RootTransform{} : root_at(roots, 0));
    }
    return out;
  }

  const std::size_t out_frames =
      frames == 0 ? 0 : static_cast<std::size_t>(std::floor((frames - 1) / ratio)) + 1;
  out.poses = Tensor::zeros(out_frames, src.pose_dims());
  Tensor roots = Tensor::zeros(out_frames, 3);
  for (std::size_t i = 0; i < out_frames; ++i) {
    const Real pos = static_cast<Real>(i) * ratio;
    const std::size_t a = std::min(static_cast<std::size_t>(pos), frames - 1);
    const std::size_t b = std::min(a + 1, frames - 1);
    const Real w = pos - static_cast<Real>(a);
    for (std::size_t d = 0; d < src.pose_dims(); ++d) {
      out.poses(i, d) = (1.0 - w) * src.poses(a, d) + w * src.poses(b, d);
    }
    if (src.world_root) {
      for (std::size_t d = 0; d < 3; ++d) {
        roots(i, d) = (1.0 - w) * (*src.world_root)(a, d) + w * (*src.world_root)(b, d);
      }
    }
  }
  if (src.world_root) {
    Tensor control = control_from_roots(roots);
    if (out_frames > 0) {
      const ControlFrame c0 = control_at(*src.control, 0);
      set_control(control, 0, {c0.forward * ratio, c0.lateral * ratio, c0.rotation * ratio});
      out.world_root = integrate_control(control, root_at(roots, 0));
    } else {
      out.world_root = roots;
    }
    out.control = control;
  }
  return out;
}

std::vector<FrameRange> window_slices(std::size_t frames, std::size_t window, Real overlap) {
  if (window == 0) throw ContractError("window length must be positive");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ContractError("overlap must be in [0, 1)");
  const std::size_t stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(window * (1.0 - overlap))));
  std::vector<FrameRange> out;
  for (std::size_t start = 0; start + window <= frames; start += stride) {
    out.emplace_back(start, start + window);
  }
  return out;
}

MotionClip slice_clip(const MotionClip& clip, FrameRange range) {
  if (range.first > range.second || range.second > clip.frames()) {
    throw ContractError("slice [" + std::to_string(range.first) + ", " +
                        std::to_string(range.second) + ") outside clip of " +
                        std::to_string(clip.frames()) + " frames");
  }
  std::vector<std::size_t> rows;
  for (std::size_t t = range.first; t < range.second; ++t) rows.push_back(t);
  MotionClip out;
  out.fps = clip.fps;
  out.skeleton = clip.skeleton;
  out.poses = rows_of(clip.poses, rows);
  if (clip.control) out.control = rows_of(*clip.control, rows);
  if (clip.world_root) out.world_root = rows_of(*clip.world_root, rows);
  return out;
}

MotionClip mirror(const MotionClip& clip) {
  if (!clip.skeleton.mirror) throw ContractError("skeleton has no mirror table");
  const std::vector<int>& pair = *clip.skeleton.mirror;
  const std::size_t joints = clip.skeleton.joints();
  MotionClip out = clip;
  for (std::size_t t = 0; t < clip.frames(); ++t) {
    for (std::size_t j = 0; j < joints; ++j) {
      const std::size_t m = static_cast<std::size_t>(pair[j]);
      out.poses(t, 3 * j) = -clip.poses(t, 3 * m);
      out.poses(t, 3 * j + 1) = clip.poses(t, 3 * m + 1);
      out.poses(t, 3 * j + 2) = clip.poses(t, 3 * m + 2);
    }
  }
  if (out.control) {
    for (std::size_t t = 0; t < clip.frames(); ++t) {
      (*out.control)(t, 1) = -(*clip.control)(t, 1);
      (*out.control)(t, 2) = -(*clip.control)(t, 2);
    }
  }
  if (out.world_root) {
    for (std::size_t t = 0; t < clip.frames(); ++t) {
      (*out.world_root)(t, 0) = -(*clip.world_root)(t, 0);
      (*out.world_root)(t, 2) = -(*clip.world_root)(t, 2);
    }
  }
  return out;
}

MotionClip time_reverse(const MotionClip& clip) {
  const std::size_t frames = clip.frames();
  std::vector<std::size_t> rows;
  for (std::size_t t = frames; t-- > 0;) rows.push_back(t);
  MotionClip out;
  out.fps = clip.fps;
  out.skeleton = clip.skeleton;
  out.poses = rows_of(clip.poses, rows);
  if (clip.world_root) out.world_root = rows_of(*clip.world_root, rows);
  if (clip.control && frames > 0) {
    Tensor control = Tensor::zeros(frames, kControlDims);
    set_control(control, 0, inverse_control(control_at(*clip.control, 0)));
    for (std::size_t k = 1; k < frames; ++k) {
      set_control(control, k, inverse_control(control_at(*clip.control, frames - k)));
    }
    out.control = control;
  } else if (clip.control) {
    out.control = *clip.control;
  }
  return out;
}

std::vector<MotionClip> augment(const MotionClip& clip) {
  MotionClip mirrored = mirror(clip);
  MotionClip reversed = time_reverse(clip);
  MotionClip both = time_reverse(mirrored);
  return {clip, std::move(mirrored), std::move(reversed), std::move(both)};
}

}  // namespace moglow::motion
