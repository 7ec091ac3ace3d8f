#pragma once

#include <functional>
#include <vector>

#include "moglow/autodiff.hpp"

namespace moglow::ad {

/// Builds a scalar loss from parameters bound through `bind`.
using Objective = std::function<Var(Binding& bind)>;

/// Compares reverse-mode gradients of `f` against central differences.
///
/// Each element of every tensor in `parameters` is perturbed by ±eps and ±2·eps in
/// place (and restored). Returns max |autodiff − fd| / (|fd| + 1e-8).
/// Throws NumericError if any evaluation is non-finite.
Real grad_check(const Objective& f, const std::vector<Tensor*>& parameters, Real eps = 1e-4);

/// Same measure for a plain function with a caller-supplied gradient; used
/// to confirm the check rejects a wrong derivative.
Real grad_check(const std::function<Real(const std::vector<Tensor>&)>& f,
                const std::vector<Tensor>& claimed_gradient, std::vector<Tensor> theta,
                Real eps = 1e-4);

}  // namespace moglow::ad
