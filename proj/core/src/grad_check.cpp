#include "moglow/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "moglow/error.hpp"

namespace moglow::ad {

namespace {

Real finite_or_throw(Real v) {
  if (!std::isfinite(v)) throw NumericError("grad_check: objective evaluated to a non-finite value");
  return v;
}

// Fourth-order five-point stencil: truncation O(eps^4), so eps can be large
// enough that round-off in f stays negligible.
template <class Eval>
Real derivative(Real& slot, Real eps, Eval&& eval) {
  const Real saved = slot;
  auto at = [&](Real offset) {
    slot = saved + offset;
    return eval();
  };
  const Real d1 = at(eps) - at(-eps);
  const Real d2 = at(2.0 * eps) - at(-2.0 * eps);
  slot = saved;
  return (8.0 * d1 - d2) / (12.0 * eps);
}

Real relative_error(Real analytic, Real numeric) {
  return std::abs(analytic - numeric) / (std::abs(numeric) + 1e-8);
}

}  // namespace

Real grad_check(const Objective& f, const std::vector<Tensor*>& parameters, Real eps) {
  std::vector<Tensor> analytic;
  {
    Graph graph(true);
    Binding bind(graph, true);
    for (Tensor* p : parameters) bind(*p);
    Var loss = f(bind);
    finite_or_throw(loss.value().item());
    graph.backward(loss);
    for (Tensor* p : parameters) analytic.push_back(bind.grad(*p));
  }

  auto evaluate = [&]() {
    Graph graph(false);
    Binding bind(graph, false);
    return finite_or_throw(f(bind).value().item());
  };

  Real worst = 0.0;
  for (std::size_t k = 0; k < parameters.size(); ++k) {
    Tensor& p = *parameters[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      worst = std::max(worst, relative_error(analytic[k][i], derivative(p[i], eps, evaluate)));
    }
  }
  return worst;
}

Real grad_check(const std::function<Real(const std::vector<Tensor>&)>& f,
                const std::vector<Tensor>& claimed_gradient, std::vector<Tensor> theta, Real eps) {
  if (claimed_gradient.size() != theta.size()) {
    throw DimensionError("grad_check: gradient and parameter lists differ in length");
  }
  Real worst = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (claimed_gradient[k].size() != theta[k].size()) {
      throw DimensionError("grad_check: gradient shape differs from parameter shape");
    }
    for (std::size_t i = 0; i < theta[k].size(); ++i) {
      const Real numeric = derivative(theta[k][i], eps, [&] { return finite_or_throw(f(theta)); });
      worst = std::max(worst, relative_error(claimed_gradient[k][i], numeric));
    }
  }
  return worst;
}

}  // namespace moglow::ad
