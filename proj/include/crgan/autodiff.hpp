#pragma once

// Tape-style reverse-mode differentiation over Tensor values.
//
// A Graph records every operation eagerly as it is executed. Nodes are appended
// in execution order, so the tape is already topologically sorted and backward()
// is a single reverse sweep. Graphs are single-use and not thread-safe; build a
// fresh one per forward pass.

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crgan/tensor.hpp"

namespace crgan {

struct Parameter;
class Graph;
class Gradients;

using NodeId = std::size_t;

/// Handle to a node on a Graph.
struct Var {
  Graph* graph = nullptr;
  NodeId id = 0;

  [[nodiscard]] const Tensor& value() const;
  [[nodiscard]] Shape shape() const { return value().shape(); }
};

enum class OpTag {
  leaf,
  matmul,
  transpose,
  add,
  sub,
  mul,
  div,
  scale,
  add_scalar,
  relu,
  leaky_relu,
  tanh,
  sigmoid,
  max0,
  log_sigmoid,
  sum,
  mean,
  add_bias,
  broadcast_rows,
  row_sum,
  mul_col,
  concat_cols,
  slice_rows,
  gather_rows,
};

const char* op_name(OpTag op);

struct Node;

/// Propagates `grad_out` of `node` into `grads` for each input that requires a gradient.
using BackwardFn =
    std::function<void(const Graph& graph, const Node& node, const Tensor& grad_out, Gradients& grads)>;

struct Node {
  OpTag op = OpTag::leaf;
  std::vector<NodeId> inputs;
  Tensor value;
  bool requires_grad = false;
  BackwardFn backward;
};

/// Per-node gradient storage produced by Graph::backward.
class Gradients {
 public:
  explicit Gradients(const Graph& graph);

  /// Gradient of the loss with respect to `v`; zeros if the loss does not depend on it.
  [[nodiscard]] Tensor of(Var v) const;
  [[nodiscard]] bool has(NodeId id) const { return !grads_[id].empty(); }
  [[nodiscard]] const Tensor& raw(NodeId id) const { return grads_[id]; }

  void accumulate(NodeId id, Tensor&& g);
  void accumulate(NodeId id, const Tensor& g);

 private:
  const Graph* graph_;
  std::vector<Tensor> grads_;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf that receives a gradient but is not bound to a Parameter.
  Var input(Tensor value);
  /// Leaf bound to a persistent parameter; accumulate_param_grads writes back into it.
  Var param(Parameter& p);

  Var record(OpTag op, std::vector<NodeId> inputs, Tensor value, BackwardFn backward);

  [[nodiscard]] const Node& node(NodeId id) const { return nodes_[id]; }
  [[nodiscard]] const Tensor& value(NodeId id) const { return nodes_[id].value; }
  [[nodiscard]] bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar loss. Throws ContractError for a non-scalar loss
  /// and NumericError for a non-finite one.
  [[nodiscard]] Gradients backward(Var loss) const;

  /// Adds the gradient of every bound parameter into Parameter::grad.
  void accumulate_param_grads(const Gradients& grads) const;

 private:
  std::deque<Node> nodes_;  // stable addresses: Var::value() references outlive later records
  std::vector<std::pair<NodeId, Parameter*>> params_;
};

// Differentiable operations. Every operand must live on the same Graph.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var relu(Var a);
Var leaky_relu(Var a, double alpha = 0.1);
Var tanh(Var a);
Var sigmoid(Var a);
/// max(0, x) with subgradient 0 at x = 0.
Var max0(Var a);
/// Numerically stable log(sigmoid(x)).
Var log_sigmoid(Var a);
Var sum(Var a);
Var mean(Var a);

/// (B x n) plus a bias column (n x 1) broadcast over rows.
Var add_bias(Var x, Var bias);
/// Repeats a (1 x n) row `count` times.
Var broadcast_rows(Var row, std::size_t count);
/// (B x n) -> (B x 1) sums along each row.
Var row_sum(Var x);
/// (B x n) with each row scaled by the matching entry of a (B x 1) column.
Var mul_col(Var x, Var column);
Var concat_cols(std::span<const Var> parts);
/// Rows [begin, end).
Var slice_rows(Var x, std::size_t begin, std::size_t end);
/// Row indices[k] of `table` becomes row k of the result.
Var gather_rows(Var table, std::span<const int> indices);

}  // namespace crgan
