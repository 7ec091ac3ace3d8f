#include "moglow/trainer.hpp"

#include <cmath>
#include <sstream>

#include "moglow/error.hpp"
#include "moglow/keyvalue.hpp"
#include "moglow/ops.hpp"

namespace moglow::train {

namespace {
constexpr std::size_t kActnormInitWindows = 64;
}  // namespace


std::string format_metric(const MetricRow& row) {
  return std::to_string(row.step) + "\t" + format_real(row.train_nll) + "\t" +
         (row.heldout_nll ? format_real(*row.heldout_nll) : std::string("-")) + "\t" +
         format_real(row.lr);
}

namespace {

std::string engine_text(const std::mt19937_64& e) {
  std::ostringstream s;
  s << e;
  return s.str();
}

void restore_engine(std::mt19937_64& e, const std::string& text) {
  std::istringstream s(text);
  s >> e;
  if (!s) throw LoadError("corrupt random engine state in checkpoint");
}

std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<Real>(n)) % n;
}

}  // namespace

Trainer::Trainer(MoGlowModel model, RunProfile profile, PreparedData data,
                 std::optional<TrainerState> resume)
    : model_(std::move(model)), profile_(std::move(profile)), data_(std::move(data)) {
  profile_.train.validate();
  if (model_.config.pose_dims != data_.train.poses.front().cols()) {
    throw DimensionError("model pose dims do not match the data");
  }
  model_.scaler = data_.scaler;
  model_.config.dropout_rate = profile_.train.dropout_rate;
  std::vector<const Tensor*> params;
  model_.for_each_parameter([&](const std::string&, const Tensor& t) { params.push_back(&t); });
  adam_ = Adam(params);
  batch_rng_.seed(profile_.train.seed);
  mask_rng_.seed(profile_.train.seed ^ 0x9E3779B97F4A7C15ull);
  if (!model_.initialized()) {
    // Statistics from one small batch are noisy when windows differ a lot
    // (standing vs walking), so actnorm sees an evenly spread sample instead.
    const std::size_t n =
        std::min(data_.train.size(), std::max(profile_.train.batch_size, kActnormInitWindows));
    std::vector<std::size_t> spread(n);
    for (std::size_t i = 0; i < n; ++i) spread[i] = i * data_.train.size() / n;
    initialize_actnorm(model_, gather_batch(data_.train, spread));
  }
  if (resume) {
    if (resume->adam_m.size() != params.size() || resume->adam_v.size() != params.size()) {
      throw LoadError("optimizer state does not match the model parameters");
    }
    adam_.first_moments() = resume->adam_m;
    adam_.second_moments() = resume->adam_v;
    adam_.set_steps(resume->step);
    restore_engine(batch_rng_, resume->batch_rng);
    restore_engine(mask_rng_, resume->mask_rng);
    step_ = resume->step;
    best_heldout_ = resume->best_heldout;
    best_step_ = resume->best_step;
  }
}

std::vector<Tensor*> Trainer::parameters() {
  std::vector<Tensor*> out;
  model_.for_each_parameter([&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

MetricRow Trainer::step() {
  const TrainConfig& cfg = profile_.train;
  const std::size_t history = model_.config.history;
  std::vector<std::size_t> idx(cfg.batch_size);
  for (std::size_t& i : idx) i = draw_index(batch_rng_, data_.train.size());
  const SequenceBatch batch = gather_batch(data_.train, idx);

  const std::size_t out_frames = batch.frames - history;
  const std::vector<std::uint8_t> mask =
      draw_history_masks(out_frames, batch.streams, history, cfg.dropout_rate, mask_rng_);

  ad::Graph g(true);
  ad::Binding bind(g, true);
  const LikelihoodGraph lg = sequence_log_likelihood(bind, model_, batch, &mask);
  const Real denom = static_cast<Real>(out_frames * batch.streams * model_.config.pose_dims);
  const ad::Var loss = ad::scale(lg.loglik, -1.0 / denom);
  const Real loss_value = loss.value().item();
  if (!std::isfinite(loss_value)) {
    throw NumericError("non-finite training loss at step " + std::to_string(step_ + 1));
  }
  g.backward(loss);

  std::vector<Tensor*> params = parameters();
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (Tensor* p : params) grads.push_back(bind.grad(*p));

  MetricRow row;
  if (cfg.clip_norm > 0.0) {
    const Real norm = global_norm(grads);
    if (norm > cfg.clip_norm) {
      const Real f = cfg.clip_norm / norm;
      for (Tensor& gt : grads)
        for (Real& v : gt.data()) v *= f;
      row.clipped = true;
    }
  }
  const Real lr = cfg.lr_at(step_ + 1);
  adam_.step(params, grads, lr);
  ++step_;

  row.step = step_;
  row.train_nll = loss_value;
  row.lr = lr;
  if (has_heldout() && (step_ % cfg.eval_every == 0 || step_ == cfg.steps)) {
    const Real h = evaluate_heldout();
    row.heldout_nll = h;
    if (h < best_heldout_) {
      best_heldout_ = h;
      best_step_ = step_;
      best_ = model_;
    }
  }
  return row;
}

Real Trainer::evaluate_heldout() const {
  if (!has_heldout()) throw UndefinedResultError("no held-out windows");
  const std::size_t history = model_.config.history;
  Real total = 0.0;
  std::size_t count = 0;
  const std::size_t chunk = 16;
  for (std::size_t start = 0; start < data_.heldout.size(); start += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(start + chunk, data_.heldout.size()); ++i) idx.push_back(i);
    const SequenceBatch batch = gather_batch(data_.heldout, idx);
    ad::Graph g(false);
    ad::Binding bind(g, false);
    total += sequence_log_likelihood(bind, model_, batch).loglik.value().item();
    count += (batch.frames - history) * batch.streams * model_.config.pose_dims;
  }
  return -total / static_cast<Real>(count);
}

TrainerState Trainer::state() const {
  TrainerState s;
  s.step = step_;
  s.adam_m = adam_.first_moments();
  s.adam_v = adam_.second_moments();
  s.batch_rng = engine_text(batch_rng_);
  s.mask_rng = engine_text(mask_rng_);
  s.best_heldout = best_heldout_;
  s.best_step = best_step_;
  return s;
}

}  // namespace moglow::train
