#include "moglow/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "moglow/error.hpp"
#include "moglow/ops.hpp"

namespace moglow {

using ad::Var;

ModelConfig ModelConfig::paper(std::size_t pose_dims, std::size_t control_dims) {
  ModelConfig c;
  c.pose_dims = pose_dims;
  c.control_dims = control_dims;
  c.steps = 16;
  c.history = 10;
  c.hidden = 512;
  c.dropout_rate = 0.95;
  return c;
}

ModelConfig ModelConfig::desk(std::size_t pose_dims, std::size_t control_dims) {
  ModelConfig c;
  c.pose_dims = pose_dims;
  c.control_dims = control_dims;
  c.steps = 4;
  c.history = 4;
  c.hidden = 64;
  c.dropout_rate = 0.95;
  return c;
}

void ModelConfig::validate() const {
  if (pose_dims < 1) throw ContractError("pose_dims must be at least 1");
  if (steps < 1) throw ContractError("a model needs at least one flow step");
  if (history < 1) throw ContractError("history length must be at least 1");
  if (hidden < 1) throw ContractError("hidden width must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate <= 1.0)) {
    throw ContractError("dropout rate must lie in [0, 1]");
  }
  if (!(scale_floor > 0.0 && scale_floor < 1.0)) throw ContractError("scale floor must lie in (0, 1)");
  if (!(fps > 0.0)) throw ContractError("fps must be positive");
}

MoGlowModel MoGlowModel::create(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  MoGlowModel model;
  model.config = config;
  model.scaler = motion::Scaler::identity(config.pose_dims, config.control_dims);
  std::mt19937_64 rng(seed);
  for (std::size_t n = 0; n < config.steps; ++n) {
    FlowStep step;
    step.actnorm = flow::ActNorm::identity(config.pose_dims);
    step.linear = flow::LinearLU::random_rotation(config.pose_dims, rng);
    step.coupling = flow::CouplingNet::create(config.lo_dims(), config.hi_dims(),
                                              config.condition_dims(), config.hidden,
                                              config.scale_floor, rng);
    model.steps.push_back(std::move(step));
  }
  return model;
}

bool MoGlowModel::initialized() const {
  for (const FlowStep& s : steps)
    if (!s.actnorm.initialized) return false;
  return true;
}

namespace {

template <typename Model, typename Fn>
void visit_parameters(Model& model, Fn&& fn) {
  for (std::size_t n = 0; n < model.steps.size(); ++n) {
    auto& s = model.steps[n];
    const std::string p = "step" + std::to_string(n) + ".";
    fn(p + "actnorm.log_scale", s.actnorm.log_scale);
    fn(p + "actnorm.bias", s.actnorm.bias);
    fn(p + "linear.lower", s.linear.lower);
    fn(p + "linear.upper", s.linear.upper);
    fn(p + "linear.log_u", s.linear.log_u);
    fn(p + "coupling.l1.w_input", s.coupling.layer1.w_input);
    fn(p + "coupling.l1.w_recurrent", s.coupling.layer1.w_recurrent);
    fn(p + "coupling.l1.bias", s.coupling.layer1.bias);
    fn(p + "coupling.l2.w_input", s.coupling.layer2.w_input);
    fn(p + "coupling.l2.w_recurrent", s.coupling.layer2.w_recurrent);
    fn(p + "coupling.l2.bias", s.coupling.layer2.bias);
    fn(p + "coupling.w_shift", s.coupling.w_shift);
    fn(p + "coupling.b_shift", s.coupling.b_shift);
    fn(p + "coupling.w_scale", s.coupling.w_scale);
    fn(p + "coupling.b_scale", s.coupling.b_scale);
  }
}

}  // namespace

void MoGlowModel::for_each_parameter(const std::function<void(const std::string&, Tensor&)>& fn) {
  visit_parameters(*this, fn);
}

void MoGlowModel::for_each_parameter(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  visit_parameters(*this, fn);
}

std::size_t MoGlowModel::parameter_count() const {
  std::size_t n = 0;
  for_each_parameter([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

Real gaussian_logpdf(std::span<const Real> z) {
  Real sq = 0.0;
  for (Real v : z) {
    if (!std::isfinite(v)) throw NumericError("gaussian_logpdf: non-finite input");
    sq += v * v;
  }
  const Real d = static_cast<Real>(z.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * sq;
}

Var gaussian_logpdf_rows(Var z) {
  const Real elements = static_cast<Real>(z.rows() * z.cols());
  return ad::add_scalar(ad::scale(ad::sum_squares(z), -0.5),
                        -0.5 * elements * std::log(2.0 * std::numbers::pi));
}

Tensor build_condition_vector(const Tensor& pose_history, const Tensor& control_history,
                              std::size_t history) {
  if (pose_history.rows() < history || control_history.rows() < history + 1) {
    throw ContractError("condition needs " + std::to_string(history) + " poses and " +
                        std::to_string(history + 1) + " control frames, got " +
                        std::to_string(pose_history.rows()) + " and " +
                        std::to_string(control_history.rows()));
  }
  const std::size_t d = pose_history.cols();
  const std::size_t c = control_history.cols();
  std::vector<Real> out;
  out.reserve(history * d + (history + 1) * c);
  const std::size_t p0 = pose_history.rows() - history;
  for (std::size_t k = 0; k < history; ++k) {
    const auto row = pose_history.row_span(p0 + k);
    out.insert(out.end(), row.begin(), row.end());
  }
  const std::size_t c0 = control_history.rows() - (history + 1);
  for (std::size_t k = 0; k <= history; ++k) {
    const auto row = control_history.row_span(c0 + k);
    out.insert(out.end(), row.begin(), row.end());
  }
  return Tensor::row(std::move(out));
}

Real uniform01(std::mt19937_64& rng) { return static_cast<Real>(rng() >> 11) * 0x1.0p-53; }

Tensor apply_data_dropout(const Tensor& history, Real rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ContractError("dropout rate must lie in [0, 1]");
  Tensor out = history;
  for (std::size_t r = 0; r < history.rows(); ++r) {
    if (uniform01(rng) < rate) {
      for (Real& v : out.row_span(r)) v = 0.0;
    }
  }
  return out;
}

SequenceBatch SequenceBatch::single(const Tensor& poses, const Tensor& controls) {
  if (poses.rows() != controls.rows()) {
    throw DimensionError("poses and control differ in frame count");
  }
  return {1, poses.rows(), poses, controls};
}

SequenceBatch SequenceBatch::stack(std::span<const Tensor> poses, std::span<const Tensor> controls) {
  if (poses.empty() || poses.size() != controls.size()) {
    throw DimensionError("stack needs matching, non-empty pose and control lists");
  }
  const std::size_t s = poses.size();
  const std::size_t f = poses.front().rows();
  const std::size_t d = poses.front().cols();
  const std::size_t c = controls.front().cols();
  SequenceBatch b{s, f, Tensor::zeros(f * s, d), Tensor::zeros(f * s, c)};
  for (std::size_t k = 0; k < s; ++k) {
    if (poses[k].rows() != f || controls[k].rows() != f || poses[k].cols() != d ||
        controls[k].cols() != c) {
      throw DimensionError("stacked sequences must share shape");
    }
    for (std::size_t t = 0; t < f; ++t) {
      std::copy_n(poses[k].ptr() + t * d, d, b.poses.ptr() + (t * s + k) * d);
      std::copy_n(controls[k].ptr() + t * c, c, b.controls.ptr() + (t * s + k) * c);
    }
  }
  return b;
}

std::vector<std::uint8_t> draw_history_masks(std::size_t output_frames, std::size_t streams,
                                             std::size_t history, Real rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ContractError("dropout rate must lie in [0, 1]");
  std::vector<std::uint8_t> keep(output_frames * streams * history);
  for (auto& k : keep) k = uniform01(rng) < rate ? 0 : 1;
  return keep;
}

Tensor batch_conditions(const SequenceBatch& batch, std::size_t history,
                        const std::vector<std::uint8_t>* keep_mask) {
  const std::size_t s = batch.streams;
  const std::size_t d = batch.poses.cols();
  const std::size_t c = batch.controls.cols();
  if (batch.frames <= history) {
    throw ContractError("sequence of " + std::to_string(batch.frames) +
                        " frames is not longer than the history " + std::to_string(history));
  }
  const std::size_t out_frames = batch.frames - history;
  if (keep_mask && keep_mask->size() != out_frames * s * history) {
    throw DimensionError("history mask size does not match the batch");
  }
  const std::size_t width = history * d + (history + 1) * c;
  Tensor cond = Tensor::zeros(out_frames * s, width);
  for (std::size_t f = 0; f < out_frames; ++f) {
    const std::size_t t = f + history;
    for (std::size_t k = 0; k < s; ++k) {
      const std::size_t row = f * s + k;
      Real* out = cond.ptr() + row * width;
      for (std::size_t j = 0; j < history; ++j) {
        const bool keep = !keep_mask || (*keep_mask)[row * history + j];
        if (keep) std::copy_n(batch.poses.ptr() + ((t - history + j) * s + k) * d, d, out);
        out += d;
      }
      for (std::size_t j = 0; j <= history; ++j) {
        std::copy_n(batch.controls.ptr() + ((t - history + j) * s + k) * c, c, out);
        out += c;
      }
    }
  }
  return cond;
}

namespace {

void check_finite(const Tensor& t, std::size_t step, std::size_t history, std::size_t streams) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      const std::size_t row = i / t.cols();
      throw NumericError("non-finite value after flow step " + std::to_string(step) + " at frame " +
                         std::to_string(history + row / streams) + ", stream " +
                         std::to_string(row % streams));
    }
  }
}

Tensor output_rows(const SequenceBatch& batch, std::size_t history) {
  const std::size_t d = batch.poses.cols();
  const std::size_t begin = history * batch.streams * d;
  return Tensor(Tensor::Shape{(batch.frames - history) * batch.streams, d},
                std::vector<Real>(batch.poses.ptr() + begin, batch.poses.ptr() + batch.poses.size()));
}

}  // namespace

LikelihoodGraph sequence_log_likelihood(ad::Binding& bind, const MoGlowModel& model,
                                        const SequenceBatch& batch,
                                        const std::vector<std::uint8_t>* keep_mask) {
  const ModelConfig& cfg = model.config;
  if (batch.poses.cols() != cfg.pose_dims || batch.controls.cols() != cfg.control_dims) {
    throw DimensionError("batch dimensions do not match the model");
  }
  ad::Graph& g = bind.graph();
  Tensor cond_rows = batch_conditions(batch, cfg.history, keep_mask);
  const std::size_t out_frames = batch.frames - cfg.history;
  const Real rows = static_cast<Real>(out_frames * batch.streams);

  Var cond = g.constant(std::move(cond_rows));
  Var h = g.constant(output_rows(batch, cfg.history));
  std::optional<Var> logdet;
  for (std::size_t n = 0; n < model.steps.size(); ++n) {
    const FlowStep& step = model.steps[n];
    flow::FlowOutput a = flow::apply(bind, step.actnorm, h, flow::Direction::normalise);
    flow::FlowOutput l = flow::apply(bind, step.linear, a.y, flow::Direction::normalise);
    flow::CouplingState state = flow::CouplingState::zeros(batch.streams, cfg.hidden);
    flow::FlowOutput c = flow::coupling_apply(bind, step.coupling, l.y, cond, out_frames, state,
                                              flow::Direction::normalise);
    Var term = ad::add(ad::scale(ad::add(a.logdet, l.logdet), rows), ad::sum(c.logdet));
    logdet = logdet ? ad::add(*logdet, term) : term;
    h = c.y;
    check_finite(h.value(), n, cfg.history, batch.streams);
  }
  Var loglik = ad::add(gaussian_logpdf_rows(h), *logdet);
  if (!std::isfinite(loglik.value().item())) throw NumericError("non-finite log-likelihood");
  return {h, loglik, out_frames};
}

void initialize_actnorm(MoGlowModel& model, const SequenceBatch& batch) {
  const ModelConfig& cfg = model.config;
  ad::Graph g(false);
  ad::Binding bind(g, false);
  Var cond = g.constant(batch_conditions(batch, cfg.history, nullptr));
  const std::size_t out_frames = batch.frames - cfg.history;
  Var h = g.constant(output_rows(batch, cfg.history));
  for (FlowStep& step : model.steps) {
    step.actnorm.initialize(h.value());
    flow::FlowOutput a = flow::apply(bind, step.actnorm, h, flow::Direction::normalise);
    flow::FlowOutput l = flow::apply(bind, step.linear, a.y, flow::Direction::normalise);
    flow::CouplingState state = flow::CouplingState::zeros(batch.streams, cfg.hidden);
    h = flow::coupling_apply(bind, step.coupling, l.y, cond, out_frames, state,
                             flow::Direction::normalise)
            .y;
  }
}

Inference infer_z(const MoGlowModel& model, const Tensor& x, const Tensor& c,
                  std::mt19937_64* dropout_rng) {
  const std::size_t history = model.config.history;
  if (x.rows() <= history) {
    throw ContractError("infer_z needs more than " + std::to_string(history) + " frames");
  }
  SequenceBatch batch = SequenceBatch::single(x, c);
  std::vector<std::uint8_t> mask;
  if (dropout_rng) {
    mask = draw_history_masks(batch.frames - history, 1, history, model.config.dropout_rate,
                              *dropout_rng);
  }
  ad::Graph g(false);
  ad::Binding bind(g, false);
  LikelihoodGraph lg = sequence_log_likelihood(bind, model, batch, dropout_rng ? &mask : nullptr);
  return {lg.z.value(), lg.loglik.value().item()};
}

}  // namespace moglow
