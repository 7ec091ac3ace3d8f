#include "moglow/adam.hpp"

#include <cmath>
#include <string>

#include "moglow/error.hpp"

namespace moglow::train {

Adam::Adam(std::span<const Tensor* const> params, AdamConfig config) : config_(config) {
  for (const Tensor* p : params) {
    m_.push_back(Tensor::zeros(p->shape()));
    v_.push_back(Tensor::zeros(p->shape()));
  }
}

void Adam::step(std::span<Tensor* const> params, std::span<const Tensor> grads, Real lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw DimensionError("optimizer holds " + std::to_string(m_.size()) + " tensors, got " +
                         std::to_string(params.size()) + " parameters and " +
                         std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!same_shape(*params[i], grads[i]) || !same_shape(m_[i], grads[i])) {
      throw DimensionError("gradient " + std::to_string(i) + " has shape " +
                           shape_string(grads[i].shape()) + ", parameter has " +
                           shape_string(params[i]->shape()));
    }
    if (!grads[i].all_finite()) {
      throw NumericError("non-finite gradient in tensor " + std::to_string(i) + "; step aborted");
    }
  }
  ++t_;
  const Real b1 = config_.beta1;
  const Real b2 = config_.beta2;
  const Real c1 = 1.0 - std::pow(b1, static_cast<Real>(t_));
  const Real c2 = 1.0 - std::pow(b2, static_cast<Real>(t_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Real* p = params[i]->ptr();
    Real* m = m_[i].ptr();
    Real* v = v_[i].ptr();
    const Real* g = grads[i].ptr();
    for (std::size_t k = 0; k < grads[i].size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const Real mhat = m[k] / c1;
      const Real vhat = v[k] / c2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

Real noam_lr(std::uint64_t step, std::uint64_t warmup, Real peak) {
  if (step < 1) throw ContractError("noam schedule starts at step 1");
  if (warmup < 1) throw ContractError("noam warmup must be at least 1");
  const Real s = static_cast<Real>(step);
  const Real w = static_cast<Real>(warmup);
  return peak * std::min(s / w, std::sqrt(w / s));
}

Real global_norm(std::span<const Tensor> grads) {
  Real sq = 0.0;
  for (const Tensor& g : grads)
    for (Real v : g.data()) sq += v * v;
  return std::sqrt(sq);
}

}  // namespace moglow::train
