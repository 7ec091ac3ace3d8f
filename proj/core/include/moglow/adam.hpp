#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "moglow/tensor.hpp"

namespace moglow::train {

struct AdamConfig {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
};

/// Adam with bias correction over a fixed, ordered list of tensors.
class Adam {
 public:
  Adam() = default;
  Adam(std::span<const Tensor* const> params, AdamConfig config = {});

  /// One update. Every gradient is checked first; a non-finite entry throws
  /// NumericError and leaves parameters and moments untouched.
  void step(std::span<Tensor* const> params, std::span<const Tensor> grads, Real lr);

  std::uint64_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }
  std::vector<Tensor>& first_moments() noexcept { return m_; }
  std::vector<Tensor>& second_moments() noexcept { return v_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }
  void set_steps(std::uint64_t t) noexcept { t_ = t; }

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// peak · min(step / warmup, sqrt(warmup / step)); equals peak at step = warmup.
Real noam_lr(std::uint64_t step, std::uint64_t warmup, Real peak);

/// Global L2 norm over every gradient.
Real global_norm(std::span<const Tensor> grads);

}  // namespace moglow::train
