#include "moglow/dataset.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "moglow/error.hpp"
#include "moglow/preprocess.hpp"

namespace moglow::train {

std::size_t WindowSet::frames() const { return poses.empty() ? 0 : poses.front().rows(); }

namespace {

void add_windows(WindowSet& set, const motion::MotionClip& clip, std::size_t window, Real overlap) {
  for (const motion::FrameRange& r : motion::window_slices(clip.frames(), window, overlap)) {
    const motion::MotionClip w = motion::slice_clip(clip, r);
    set.poses.push_back(w.poses);
    set.controls.push_back(*w.control);
  }
}

}  // namespace

PreparedData prepare_data(std::span<const motion::MotionClip> clips, const TrainConfig& config,
                          std::size_t history) {
  config.validate();
  if (clips.empty()) throw DegenerateDataError("no clips to train on");
  if (config.window <= history) {
    throw ConfigError("window (" + std::to_string(config.window) + ") must exceed history (" +
                      std::to_string(history) + ")");
  }
  std::vector<motion::MotionClip> train_clips;
  std::vector<motion::MotionClip> heldout_clips;
  for (const motion::MotionClip& clip : clips) {
    if (!clip.control) throw ContractError("training clips need a control track");
    const std::size_t t = clip.frames();
    const std::size_t held = static_cast<std::size_t>(std::floor(t * config.heldout_fraction));
    const motion::MotionClip head = motion::slice_clip(clip, {0, t - held});
    if (config.augment) {
      for (motion::MotionClip& c : motion::augment(head)) train_clips.push_back(std::move(c));
    } else {
      train_clips.push_back(head);
    }
    if (held > history) heldout_clips.push_back(motion::slice_clip(clip, {t - held, t}));
  }

  PreparedData out;
  out.scaler = motion::fit_scaler(train_clips);
  for (const motion::MotionClip& c : train_clips) {
    add_windows(out.train, motion::apply_scaler(c, out.scaler, motion::ScalerDirection::standardize),
                config.window, config.overlap);
  }
  for (const motion::MotionClip& c : heldout_clips) {
    const motion::MotionClip s =
        motion::apply_scaler(c, out.scaler, motion::ScalerDirection::standardize);
    if (s.frames() >= config.window) {
      add_windows(out.heldout, s, config.window, config.overlap);
    }
  }
  if (out.train.size() == 0) {
    throw DegenerateDataError("clips are shorter than one " + std::to_string(config.window) +
                              "-frame window");
  }
  return out;
}

SequenceBatch gather_batch(const WindowSet& set, std::span<const std::size_t> indices) {
  std::vector<Tensor> poses;
  std::vector<Tensor> controls;
  for (std::size_t i : indices) {
    poses.push_back(set.poses.at(i));
    controls.push_back(set.controls.at(i));
  }
  return SequenceBatch::stack(poses, controls);
}

Real gaussian_baseline_nll(const WindowSet& set, std::size_t history) {
  Real sq = 0.0;
  std::size_t count = 0;
  for (const Tensor& w : set.poses) {
    for (std::size_t t = history; t < w.rows(); ++t) {
      for (std::size_t d = 0; d < w.cols(); ++d) sq += w(t, d) * w(t, d);
      count += w.cols();
    }
  }
  if (count == 0) throw UndefinedResultError("no output frames for the baseline");
  return 0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * sq / static_cast<Real>(count);
}

}  // namespace moglow::train
