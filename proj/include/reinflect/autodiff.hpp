#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "reinflect/tensor.hpp"

namespace reinflect {

class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
class Expr {
 public:
  Expr() = default;

  const Tensor& value() const;
  // Gradient of the backward() root with respect to this node.
  const Tensor& grad() const;

  Graph& graph() const noexcept { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  friend class Graph;
  Expr(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so the
// tape is already a topological order and backward() is a single reverse sweep.
// A graph is single-use: build it, call backward() once, read gradients.
class Graph {
 public:
  // Called during backward with the node's own id; reads grad(self) and
  // accumulates into the parents through grad_ref().
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  // An inference graph (track_gradients = false) records no backward rules.
  explicit Graph(bool track_gradients = true) : track_gradients_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Expr constant(Tensor value);
  Expr variable(Tensor value);
  // Leaf that reads `value` in place. The referenced tensor must outlive the graph.
  Expr parameter(const Tensor& value);

  // Appends an op result. Used by the op library; parents must already be on the tape.
  Expr record(Tensor value, std::span<const Expr> parents, BackwardFn backward);

  void backward(Expr root);

  const Tensor& value(std::size_t id) const noexcept {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.owned;
  }
  const Tensor& grad(std::size_t id) const;
  Tensor& grad_ref(std::size_t id);
  bool requires_grad(std::size_t id) const noexcept { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    mutable Tensor grad;
    mutable bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Expr push(Node node);

  std::vector<Node> nodes_;
  bool track_gradients_ = true;
  bool backward_done_ = false;
};

// Matrix product. Besides [m×k]·[k×n], a rank-1 left operand is a row vector
// ([k]·[k×n] -> [n]) and a rank-1 right operand a column ([m×k]·[k] -> [m]).
Expr matmul(Expr a, Expr b);

Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr tanh(Expr x);
Expr sigmoid(Expr x);
// 1 - x elementwise.
Expr one_minus(Expr x);

// Sum of equally shaped operands.
Expr add_n(std::span<const Expr> terms);

// Softmax of a vector, max-subtracted.
Expr softmax(Expr x);
// -log softmax(logits)[index], evaluated as logsumexp(logits) - logits[index].
Expr neg_log_softmax(Expr logits, std::size_t index);

// Concatenation along the last axis; matrices must agree on rows.
Expr concat(Expr a, Expr b);
// Row `id` of a [V×d] table as a [d] vector.
Expr lookup(Expr table, std::size_t id);
// Stacks equally sized vectors into a [T×n] matrix.
Expr stack_rows(std::span<const Expr> rows);
// [T×n] matrix plus an [n] vector added to every row.
Expr add_row_broadcast(Expr matrix, Expr row);
// Sum of all elements as a scalar.
Expr sum(Expr x);

}  // namespace reinflect
