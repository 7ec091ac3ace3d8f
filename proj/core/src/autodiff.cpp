#include "moglow/autodiff.hpp"

#include "moglow/error.hpp"

namespace moglow::ad {

const Tensor& Var::value() const { return graph->value(id); }

Var Graph::append(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return append(std::move(n));
}

Var Graph::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_;
  return append(std::move(n));
}

Var Graph::parameter(const Tensor& value, bool requires_grad) {
  Node n;
  n.external = &value;
  n.requires_grad = record_ && requires_grad;
  return append(std::move(n));
}

Var Graph::push(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (nodes_[p.id].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  return append(std::move(n));
}

Var Graph::push(Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (nodes_[p.id].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  return append(std::move(n));
}

const Tensor& Graph::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

Tensor& Graph::adjoint(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.has_adjoint) {
    n.adjoint = Tensor::zeros(value(id).shape());
    n.has_adjoint = true;
  }
  return n.adjoint;
}

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.has_adjoint) return n.adjoint;
  return Tensor::zeros(value(v.id).shape());
}

void Graph::backward(Var loss) {
  if (!record_) throw ContractError("backward() on a graph built without recording");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " +
                        shape_string(value(loss.id).shape()));
  }
  for (Node& n : nodes_) {
    n.has_adjoint = false;
    n.adjoint = Tensor();
  }
  adjoint(loss.id)[0] = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_adjoint || !n.backward) continue;
    n.backward(*this, id);
  }
}

Var Binding::operator()(const Tensor& parameter) {
  auto it = leaves_.find(&parameter);
  if (it != leaves_.end()) return it->second;
  Var v = graph_.parameter(parameter, trainable_);
  leaves_.emplace(&parameter, v);
  return v;
}

Tensor Binding::grad(const Tensor& parameter) const {
  auto it = leaves_.find(&parameter);
  if (it == leaves_.end()) return Tensor::zeros(parameter.shape());
  return graph_.grad(it->second);
}

}  // namespace moglow::ad
