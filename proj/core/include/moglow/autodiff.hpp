#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "moglow/tensor.hpp"

namespace moglow::ad {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode tape.
///
/// Nodes are appended in evaluation order, so creation order is a
/// topological order; backward() walks it in reverse and accumulates
/// adjoints in that fixed order, which makes gradients reproducible bit for
/// bit. A graph belongs to one thread.
class Graph {
 public:
  /// Propagates the adjoint of node `self` into its parents.
  using BackwardFn = std::function<void(Graph&, std::uint32_t self)>;

  /// With record == false no backward closures are kept (inference mode).
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return record_; }

  Var constant(Tensor value);
  Var variable(Tensor value);
  /// Leaf that refers to an externally owned tensor (no copy). The tensor
  /// must outlive the graph.
  Var parameter(const Tensor& value, bool requires_grad = true);

  /// Appends an operation node. `fn` is dropped when no parent needs grad.
  Var push(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var push(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

  const Tensor& value(std::uint32_t id) const;
  const Tensor& value(Var v) const { return value(v.id); }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Adjoint buffer of a node, allocated (zeroed) on first access.
  Tensor& adjoint(std::uint32_t id);
  /// Adjoint after backward(); zeros of the value's shape when unreached.
  Tensor grad(Var v) const;

  /// Seeds d loss / d loss = 1 and propagates. `loss` must hold one value.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor adjoint;
    BackwardFn backward;
    bool requires_grad = false;
    bool has_adjoint = false;
  };

  Var append(Node node);

  bool record_;
  std::vector<Node> nodes_;
};

/// Maps parameter tensors owned by a model onto leaves of one graph.
///
/// The same tensor always maps to the same leaf, so shared parameters
/// receive the sum of their adjoints.
class Binding {
 public:
  Binding(Graph& graph, bool trainable) : graph_(graph), trainable_(trainable) {}

  Graph& graph() noexcept { return graph_; }
  Var operator()(const Tensor& parameter);
  /// Adjoint of a bound parameter, zeros if it was never bound.
  Tensor grad(const Tensor& parameter) const;

 private:
  Graph& graph_;
  bool trainable_;
  std::unordered_map<const Tensor*, Var> leaves_;
};

}  // namespace moglow::ad
