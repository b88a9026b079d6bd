#include "crgan/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "crgan/errors.hpp"
#include "crgan/parameter.hpp"

namespace crgan {
namespace {

Graph& same_graph(Var a, Var b, const char* op) {
  if (a.graph == nullptr || a.graph != b.graph) {
    throw ContractError(std::string(op) + ": operands belong to different graphs");
  }
  return *a.graph;
}

Graph& graph_of(Var a, const char* op) {
  if (a.graph == nullptr) throw ContractError(std::string(op) + ": detached variable");
  return *a.graph;
}

void require_same_shape(Var a, Var b, const char* op) {
  crgan::require_same_shape(a.value(), b.value(), op);
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

/// Records a unary pointwise op whose derivative is computed from (input, output).
template <typename Fwd, typename Deriv>
Var pointwise(Var a, OpTag op, Fwd fwd, Deriv deriv) {
  Graph& g = graph_of(a, op_name(op));
  Tensor out = map(a.value(), fwd);
  return g.record(op, {a.id}, std::move(out),
                  [deriv](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    const NodeId in = node.inputs[0];
                    if (!graph.requires_grad(in)) return;
                    const Tensor& x = graph.value(in);
                    Tensor gin(x.rows(), x.cols());
                    for (std::size_t i = 0; i < x.size(); ++i) gin[i] = gout[i] * deriv(x[i], node.value[i]);
                    grads.accumulate(in, std::move(gin));
                  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* op_name(OpTag op) {
  switch (op) {
    case OpTag::leaf: return "leaf";
    case OpTag::matmul: return "matmul";
    case OpTag::transpose: return "transpose";
    case OpTag::add: return "add";
    case OpTag::sub: return "sub";
    case OpTag::mul: return "mul";
    case OpTag::div: return "div";
    case OpTag::scale: return "scale";
    case OpTag::add_scalar: return "add_scalar";
    case OpTag::relu: return "relu";
    case OpTag::leaky_relu: return "leaky_relu";
    case OpTag::tanh: return "tanh";
    case OpTag::sigmoid: return "sigmoid";
    case OpTag::max0: return "max0";
    case OpTag::log_sigmoid: return "log_sigmoid";
    case OpTag::sum: return "sum";
    case OpTag::mean: return "mean";
    case OpTag::add_bias: return "add_bias";
    case OpTag::broadcast_rows: return "broadcast_rows";
    case OpTag::row_sum: return "row_sum";
    case OpTag::mul_col: return "mul_col";
    case OpTag::concat_cols: return "concat_cols";
    case OpTag::slice_rows: return "slice_rows";
    case OpTag::gather_rows: return "gather_rows";
  }
  return "?";
}

const Tensor& Var::value() const {
  if (graph == nullptr) throw ContractError("value() of detached variable");
  return graph->value(id);
}

// ---------------------------------------------------------------------------
// Gradients

Gradients::Gradients(const Graph& graph) : graph_(&graph), grads_(graph.size()) {}

Tensor Gradients::of(Var v) const {
  if (v.graph != graph_) throw ContractError("gradient requested for a variable of another graph");
  if (grads_[v.id].empty()) return Tensor::zeros_like(graph_->value(v.id));
  return grads_[v.id];
}

void Gradients::accumulate(NodeId id, Tensor&& g) {
  if (grads_[id].empty()) {
    grads_[id] = std::move(g);
  } else {
    add_inplace(grads_[id], g);
  }
}

void Gradients::accumulate(NodeId id, const Tensor& g) {
  if (grads_[id].empty()) {
    grads_[id] = g;
  } else {
    add_inplace(grads_[id], g);
  }
}

// ---------------------------------------------------------------------------
// Graph

Var Graph::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite value entering graph as constant");
  nodes_.push_back(Node{OpTag::leaf, {}, std::move(value), false, {}});
  return Var{this, nodes_.size() - 1};
}

Var Graph::input(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite value entering graph as input");
  nodes_.push_back(Node{OpTag::leaf, {}, std::move(value), true, {}});
  return Var{this, nodes_.size() - 1};
}

Var Graph::param(Parameter& p) {
  if (!p.value.all_finite()) throw NumericError("non-finite value in parameter '" + p.name + "'");
  nodes_.push_back(Node{OpTag::leaf, {}, p.value, true, {}});
  params_.emplace_back(nodes_.size() - 1, &p);
  return Var{this, nodes_.size() - 1};
}

Var Graph::record(OpTag op, std::vector<NodeId> inputs, Tensor value, BackwardFn backward) {
  const bool needs =
      std::any_of(inputs.begin(), inputs.end(), [this](NodeId i) { return nodes_[i].requires_grad; });
  nodes_.push_back(Node{op, std::move(inputs), std::move(value), needs, needs ? std::move(backward) : BackwardFn{}});
  return Var{this, nodes_.size() - 1};
}

Gradients Graph::backward(Var loss) const {
  if (loss.graph != this) throw ContractError("backward: loss belongs to another graph");
  const Tensor& lv = value(loss.id);
  if (!lv.is_scalar()) throw ContractError("backward: loss must be scalar, got " + to_string(lv.shape()));
  if (!lv.all_finite()) throw NumericError("backward: loss is not finite");

  Gradients grads(*this);
  grads.accumulate(loss.id, Tensor::scalar(1.0));
  for (NodeId id = loss.id + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward || !grads.has(id)) continue;
    n.backward(*this, n, grads.raw(id), grads);
  }
  return grads;
}

void Graph::accumulate_param_grads(const Gradients& grads) const {
  for (const auto& [id, p] : params_) {
    if (grads.has(id)) add_inplace(p->grad, grads.raw(id));
  }
}

// ---------------------------------------------------------------------------
// Operations

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b, "matmul");
  Tensor out = matmul(a.value(), b.value());
  return g.record(OpTag::matmul, {a.id, b.id}, std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    const NodeId ia = node.inputs[0], ib = node.inputs[1];
                    if (graph.requires_grad(ia)) grads.accumulate(ia, matmul_nt(gout, graph.value(ib)));
                    if (graph.requires_grad(ib)) grads.accumulate(ib, matmul_tn(graph.value(ia), gout));
                  });
}

Var transpose(Var a) {
  Graph& g = graph_of(a, "transpose");
  return g.record(OpTag::transpose, {a.id}, transpose(a.value()),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    if (graph.requires_grad(node.inputs[0])) grads.accumulate(node.inputs[0], transpose(gout));
                  });
}

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b, "add");
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  add_inplace(out, b.value());
  return g.record(OpTag::add, {a.id, b.id}, std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    for (NodeId in : node.inputs)
                      if (graph.requires_grad(in)) grads.accumulate(in, gout);
                  });
}

Var sub(Var a, Var b) {
  Graph& g = same_graph(a, b, "sub");
  require_same_shape(a, b, "sub");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return g.record(OpTag::sub, {a.id, b.id}, std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    if (graph.requires_grad(node.inputs[0])) grads.accumulate(node.inputs[0], gout);
                    if (graph.requires_grad(node.inputs[1])) {
                      Tensor neg = gout;
                      scale_inplace(neg, -1.0);
                      grads.accumulate(node.inputs[1], std::move(neg));
                    }
                  });
}

Var mul(Var a, Var b) {
  Graph& g = same_graph(a, b, "mul");
  require_same_shape(a, b, "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return g.record(OpTag::mul, {a.id, b.id}, std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    const NodeId ia = node.inputs[0], ib = node.inputs[1];
                    const Tensor& x = graph.value(ia);
                    const Tensor& y = graph.value(ib);
                    if (graph.requires_grad(ia)) {
                      Tensor gin(x.rows(), x.cols());
                      for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = gout[i] * y[i];
                      grads.accumulate(ia, std::move(gin));
                    }
                    if (graph.requires_grad(ib)) {
                      Tensor gin(y.rows(), y.cols());
                      for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = gout[i] * x[i];
                      grads.accumulate(ib, std::move(gin));
                    }
                  });
}

Var div(Var a, Var b) {
  Graph& g = same_graph(a, b, "div");
  require_same_shape(a, b, "div");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
  return g.record(OpTag::div, {a.id, b.id}, std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    const NodeId ia = node.inputs[0], ib = node.inputs[1];
                    const Tensor& y = graph.value(ib);
                    if (graph.requires_grad(ia)) {
                      Tensor gin(y.rows(), y.cols());
                      for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = gout[i] / y[i];
                      grads.accumulate(ia, std::move(gin));
                    }
                    if (graph.requires_grad(ib)) {
                      Tensor gin(y.rows(), y.cols());
                      for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = -gout[i] * node.value[i] / y[i];
                      grads.accumulate(ib, std::move(gin));
                    }
                  });
}

Var scale(Var a, double factor) {
  Graph& g = graph_of(a, "scale");
  Tensor out = a.value();
  scale_inplace(out, factor);
  return g.record(OpTag::scale, {a.id}, std::move(out),
                  [factor](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    if (!graph.requires_grad(node.inputs[0])) return;
                    Tensor gin = gout;
                    scale_inplace(gin, factor);
                    grads.accumulate(node.inputs[0], std::move(gin));
                  });
}

Var add_scalar(Var a, double offset) {
  Graph& g = graph_of(a, "add_scalar");
  Tensor out = map(a.value(), [offset](double x) { return x + offset; });
  return g.record(OpTag::add_scalar, {a.id}, std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    if (graph.requires_grad(node.inputs[0])) grads.accumulate(node.inputs[0], gout);
                  });
}

Var relu(Var a) {
  return pointwise(
      a, OpTag::relu, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double alpha) {
  return pointwise(
      a, OpTag::leaky_relu, [alpha](double x) { return x > 0.0 ? x : alpha * x; },
      [alpha](double x, double) { return x > 0.0 ? 1.0 : alpha; });
}

Var tanh(Var a) {
  return pointwise(
      a, OpTag::tanh, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return pointwise(a, OpTag::sigmoid, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var max0(Var a) {
  return pointwise(
      a, OpTag::max0, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var log_sigmoid(Var a) {
  // log sigma(x) = min(x, 0) - log1p(exp(-|x|)); derivative is sigma(-x).
  return pointwise(
      a, OpTag::log_sigmoid, [](double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return stable_sigmoid(-x); });
}

Var sum(Var a) {
  Graph& g = graph_of(a, "sum");
  const Tensor& x = a.value();
  if (x.empty()) throw DomainError("sum of empty tensor");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return g.record(OpTag::sum, {a.id}, Tensor::scalar(acc),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    const NodeId in = node.inputs[0];
                    if (!graph.requires_grad(in)) return;
                    const Tensor& xv = graph.value(in);
                    grads.accumulate(in, Tensor(xv.rows(), xv.cols(), gout.item()));
                  });
}

Var mean(Var a) {
  Graph& g = graph_of(a, "mean");
  const Tensor& x = a.value();
  if (x.empty()) throw DomainError("mean of empty tensor");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const auto n = static_cast<double>(x.size());
  return g.record(OpTag::mean, {a.id}, Tensor::scalar(acc / n),
                  [n](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    const NodeId in = node.inputs[0];
                    if (!graph.requires_grad(in)) return;
                    const Tensor& xv = graph.value(in);
                    grads.accumulate(in, Tensor(xv.rows(), xv.cols(), gout.item() / n));
                  });
}

Var add_bias(Var x, Var bias) {
  Graph& g = same_graph(x, bias, "add_bias");
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.cols() != 1 || bv.rows() != xv.cols()) {
    throw DimensionError("add_bias: shape mismatch " + to_string(xv.shape()) + " vs bias " +
                         to_string(bv.shape()));
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  return g.record(OpTag::add_bias, {x.id, bias.id}, std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    if (graph.requires_grad(node.inputs[0])) grads.accumulate(node.inputs[0], gout);
                    if (graph.requires_grad(node.inputs[1])) {
                      Tensor gb(gout.cols(), 1);
                      for (std::size_t r = 0; r < gout.rows(); ++r)
                        for (std::size_t c = 0; c < gout.cols(); ++c) gb[c] += gout(r, c);
                      grads.accumulate(node.inputs[1], std::move(gb));
                    }
                  });
}

Var broadcast_rows(Var row, std::size_t count) {
  Graph& g = graph_of(row, "broadcast_rows");
  const Tensor& rv = row.value();
  if (rv.rows() != 1) throw DimensionError("broadcast_rows: expected a row, got " + to_string(rv.shape()));
  Tensor out(count, rv.cols());
  for (std::size_t r = 0; r < count; ++r)
    for (std::size_t c = 0; c < rv.cols(); ++c) out(r, c) = rv[c];
  return g.record(OpTag::broadcast_rows, {row.id}, std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    if (!graph.requires_grad(node.inputs[0])) return;
                    Tensor gr(1, gout.cols());
                    for (std::size_t r = 0; r < gout.rows(); ++r)
                      for (std::size_t c = 0; c < gout.cols(); ++c) gr[c] += gout(r, c);
                    grads.accumulate(node.inputs[0], std::move(gr));
                  });
}

Var row_sum(Var x) {
  Graph& g = graph_of(x, "row_sum");
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) acc += xv(r, c);
    out[r] = acc;
  }
  return g.record(OpTag::row_sum, {x.id}, std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    const NodeId in = node.inputs[0];
                    if (!graph.requires_grad(in)) return;
                    const Tensor& v = graph.value(in);
                    Tensor gin(v.rows(), v.cols());
                    for (std::size_t r = 0; r < v.rows(); ++r)
                      for (std::size_t c = 0; c < v.cols(); ++c) gin(r, c) = gout[r];
                    grads.accumulate(in, std::move(gin));
                  });
}

Var mul_col(Var x, Var column) {
  Graph& g = same_graph(x, column, "mul_col");
  const Tensor& xv = x.value();
  const Tensor& cv = column.value();
  if (cv.cols() != 1 || cv.rows() != xv.rows()) {
    throw DimensionError("mul_col: shape mismatch " + to_string(xv.shape()) + " vs column " +
                         to_string(cv.shape()));
  }
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = cv[r] * xv(r, c);
  return g.record(OpTag::mul_col, {x.id, column.id}, std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    const NodeId ix = node.inputs[0], ic = node.inputs[1];
                    const Tensor& xv2 = graph.value(ix);
                    const Tensor& cv2 = graph.value(ic);
                    if (graph.requires_grad(ix)) {
                      Tensor gin(xv2.rows(), xv2.cols());
                      for (std::size_t r = 0; r < xv2.rows(); ++r)
                        for (std::size_t c = 0; c < xv2.cols(); ++c) gin(r, c) = gout(r, c) * cv2[r];
                      grads.accumulate(ix, std::move(gin));
                    }
                    if (graph.requires_grad(ic)) {
                      Tensor gc(cv2.rows(), 1);
                      for (std::size_t r = 0; r < xv2.rows(); ++r) {
                        double acc = 0.0;
                        for (std::size_t c = 0; c < xv2.cols(); ++c) acc += gout(r, c) * xv2(r, c);
                        gc[r] = acc;
                      }
                      grads.accumulate(ic, std::move(gc));
                    }
                  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DomainError("concat_cols: no operands");
  Graph& g = graph_of(parts[0], "concat_cols");
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  std::vector<NodeId> ids;
  for (const Var& p : parts) {
    same_graph(parts[0], p, "concat_cols");
    if (p.value().rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + to_string(parts[0].shape()) + " vs " +
                           to_string(p.shape()));
    }
    cols += p.value().cols();
    ids.push_back(p.id);
  }
  Tensor out(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, off + c) = v(r, c);
    off += v.cols();
  }
  return g.record(OpTag::concat_cols, std::move(ids), std::move(out),
                  [](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    std::size_t offset = 0;
                    for (NodeId in : node.inputs) {
                      const Tensor& v = graph.value(in);
                      if (graph.requires_grad(in)) {
                        Tensor gin(v.rows(), v.cols());
                        for (std::size_t r = 0; r < v.rows(); ++r)
                          for (std::size_t c = 0; c < v.cols(); ++c) gin(r, c) = gout(r, offset + c);
                        grads.accumulate(in, std::move(gin));
                      }
                      offset += v.cols();
                    }
                  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(x, "slice_rows");
  const Tensor& xv = x.value();
  if (begin > end || end > xv.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for " + to_string(xv.shape()));
  }
  const std::size_t cols = xv.cols();
  std::vector<double> data(xv.data().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                           xv.data().begin() + static_cast<std::ptrdiff_t>(end * cols));
  return g.record(OpTag::slice_rows, {x.id}, Tensor(end - begin, cols, std::move(data)),
                  [begin](const Graph& graph, const Node& node, const Tensor& gout, Gradients& grads) {
                    const NodeId in = node.inputs[0];
                    if (!graph.requires_grad(in)) return;
                    const Tensor& v = graph.value(in);
                    Tensor gin(v.rows(), v.cols());
                    std::copy(gout.data().begin(), gout.data().end(),
                              gin.data().begin() + static_cast<std::ptrdiff_t>(begin * v.cols()));
                    grads.accumulate(in, std::move(gin));
                  });
}

Var gather_rows(Var table, std::span<const int> indices) {
  Graph& g = graph_of(table, "gather_rows");
  const Tensor& tv = table.value();
  for (int idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= tv.rows()) {
      throw DomainError("gather_rows: index " + std::to_string(idx) + " outside [0, " +
                        std::to_string(tv.rows()) + ")");
    }
  }
  Tensor out(indices.size(), tv.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto src = tv.row_span(static_cast<std::size_t>(indices[r]));
    std::copy(src.begin(), src.end(), out.row_span(r).begin());
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return g.record(OpTag::gather_rows, {table.id}, std::move(out),
                  [idx = std::move(idx)](const Graph& graph, const Node& node, const Tensor& gout,
                                         Gradients& grads) {
                    const NodeId in = node.inputs[0];
                    if (!graph.requires_grad(in)) return;
                    const Tensor& v = graph.value(in);
                    Tensor gin(v.rows(), v.cols());
                    for (std::size_t r = 0; r < idx.size(); ++r) {
                      auto dst = gin.row_span(static_cast<std::size_t>(idx[r]));
                      auto src = gout.row_span(r);
                      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
                    }
                    grads.accumulate(in, std::move(gin));
                  });
}

}  // namespace crgan
