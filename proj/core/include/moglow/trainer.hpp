#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "moglow/adam.hpp"
#include "moglow/config.hpp"
#include "moglow/dataset.hpp"
#include "moglow/model.hpp"

namespace moglow::train {

/// One metrics line: "step<TAB>train_nll<TAB>heldout_nll<TAB>lr". NLLs are
/// nats per pose dimension; heldout_nll is "-" on steps without evaluation.
struct MetricRow {
  std::uint64_t step = 0;
  Real train_nll = 0.0;
  std::optional<Real> heldout_nll;
  Real lr = 0.0;
  bool clipped = false;
};
std::string format_metric(const MetricRow& row);

/// Everything beyond the model needed to continue training bit-exactly.
struct TrainerState {
  std::uint64_t step = 0;
  std::vector<Tensor> adam_m;
  std::vector<Tensor> adam_v;
  std::string batch_rng;
  std::string mask_rng;
  Real best_heldout = std::numeric_limits<Real>::infinity();
  std::uint64_t best_step = 0;
};

/// Maximum-likelihood training with Adam. Batches and dropout masks come
/// from two separately seeded engines, so changing the dropout rate leaves
/// the batch sequence untouched.
class Trainer {
 public:
  /// The model's scaler is replaced by the data's. Actnorm layers that are
  /// not yet initialised are set from an evenly spread sample of windows.
  Trainer(MoGlowModel model, RunProfile profile, PreparedData data,
          std::optional<TrainerState> resume = std::nullopt);

  /// One optimisation step. On a non-finite loss or gradient it throws
  /// NumericError and leaves the model at its last good state.
  MetricRow step();
  bool done() const noexcept { return step_ >= profile_.train.steps; }

  /// Mean held-out NLL per dimension with dropout disabled.
  Real evaluate_heldout() const;
  bool has_heldout() const noexcept { return data_.heldout.size() > 0; }

  const MoGlowModel& model() const noexcept { return model_; }
  /// Model with the lowest held-out NLL seen so far (the current one when
  /// nothing has been evaluated).
  const MoGlowModel& best_model() const noexcept { return best_ ? *best_ : model_; }
  const RunProfile& profile() const noexcept { return profile_; }
  const PreparedData& data() const noexcept { return data_; }
  TrainerState state() const;
  std::uint64_t steps_done() const noexcept { return step_; }

 private:
  std::vector<Tensor*> parameters();

  MoGlowModel model_;
  RunProfile profile_;
  PreparedData data_;
  Adam adam_;
  std::mt19937_64 batch_rng_;
  std::mt19937_64 mask_rng_;
  std::uint64_t step_ = 0;
  std::optional<MoGlowModel> best_;
  Real best_heldout_ = std::numeric_limits<Real>::infinity();
  std::uint64_t best_step_ = 0;
};

}  // namespace moglow::train
