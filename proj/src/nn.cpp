#include "crgan/nn.hpp"

#include <algorithm>
#include <cmath>

#include "crgan/errors.hpp"

namespace crgan {
namespace {

constexpr double kNormFloor = 1e-12;

void normalize(Tensor& t) {
  const double n = std::max(norm(t.data()), kNormFloor);
  scale_inplace(t, 1.0 / n);
}

}  // namespace

Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(rows, cols);
  for (double& x : t.data()) x = rng.uniform(-limit, limit);
  return t;
}

Tensor random_unit_vector(std::size_t n, Rng& rng) {
  Tensor u(n, 1);
  for (std::size_t i = 0; i < n; i += 2) {
    const auto [a, b] = rng.normal_pair();
    u[i] = a;
    if (i + 1 < n) u[i + 1] = b;
  }
  normalize(u);
  return u;
}

double power_iteration(const Tensor& w, Tensor& u, bool advance) {
  if (u.rows() != w.rows() || u.cols() != 1) {
    throw DimensionError("power_iteration: vector " + to_string(u.shape()) + " does not match weight " +
                         to_string(w.shape()));
  }
  Tensor v = matmul_tn(w, u);  // W^T u, (in x 1)
  normalize(v);
  if (advance) {
    u = matmul(w, v);
    normalize(u);
  }
  const Tensor wv = matmul(w, v);
  return dot(u.data(), wv.data());
}

Var activate(Var x, Activation act) {
  switch (act.kind) {
    case Activation::Kind::none: return x;
    case Activation::Kind::relu: return relu(x);
    case Activation::Kind::leaky_relu: return leaky_relu(x, act.alpha);
    case Activation::Kind::tanh: return tanh(x);
    case Activation::Kind::sigmoid: return sigmoid(x);
  }
  return x;
}

// ---------------------------------------------------------------------------
// DenseLayer

DenseLayer::DenseLayer(std::string name, std::size_t in, std::size_t out, bool spectral_norm, Rng& rng,
                       bool bias)
    : weight_(name + ".weight", glorot_uniform(out, in, in, out, rng)),
      bias_(name + ".bias", Tensor(out, 1)),
      sn_u_(random_unit_vector(out, rng)),
      spectral_norm_(spectral_norm),
      has_bias_(bias) {
  if (in == 0 || out == 0) throw DomainError("dense layer '" + name + "' needs nonzero dimensions");
}

double DenseLayer::sigma_for_forward(bool training) {
  if (!sigma_frozen_) last_sigma_ = power_iteration(weight_.value, sn_u_, training);
  return last_sigma_;
}

Var DenseLayer::forward(Graph& g, Var x, bool training) {
  if (x.value().cols() != in_dim()) {
    throw DimensionError("dense '" + weight_.name + "': input " + to_string(x.shape()) +
                         " does not match weight " + to_string(weight_.value.shape()));
  }
  Var w = g.param(weight_);
  if (spectral_norm_) w = scale(w, 1.0 / sigma_for_forward(training));
  Var y = matmul(x, transpose(w));
  if (has_bias_) y = add_bias(y, g.param(bias_));
  return y;
}

void DenseLayer::warm_up(int iterations) {
  for (int i = 0; i < iterations; ++i) last_sigma_ = power_iteration(weight_.value, sn_u_, true);
}

Tensor DenseLayer::effective_weight() const {
  Tensor w = weight_.value;
  if (spectral_norm_) {
    Tensor u = sn_u_;
    scale_inplace(w, 1.0 / power_iteration(weight_.value, u, false));
  }
  return w;
}

ParameterList DenseLayer::parameters() {
  ParameterList out{&weight_};
  if (has_bias_) out.push_back(&bias_);
  return out;
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(const std::string& name, std::size_t in, std::span<const LayerSpec> layers, bool spectral_norm, Rng& rng)
    : in_(in) {
  std::size_t prev = in;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers_.emplace_back(name + "." + std::to_string(i), prev, layers[i].width, spectral_norm, rng);
    activations_.push_back(layers[i].activation);
    prev = layers[i].width;
  }
}

Var Mlp::forward(Graph& g, Var x, bool training, std::vector<Tensor>* preactivations) {
  if (x.value().cols() != in_) {
    throw DimensionError("mlp: input " + to_string(x.shape()) + " does not match input width " +
                         std::to_string(in_));
  }
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(g, h, training);
    if (preactivations != nullptr) preactivations->push_back(h.value());
    h = activate(h, activations_[i]);
  }
  return h;
}

ParameterList Mlp::parameters() {
  ParameterList out;
  for (auto& l : layers_) {
    auto p = l.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// ClassEmbedding

ClassEmbedding::ClassEmbedding(std::string name, std::size_t num_classes, std::size_t dim, Rng& rng)
    : table_(std::move(name), glorot_uniform(num_classes, dim, num_classes, dim, rng)) {
  if (num_classes == 0 || dim == 0) throw DomainError("class embedding needs nonzero dimensions");
}

ClassEmbedding::ClassEmbedding(std::string name, Tensor table) : table_(std::move(name), std::move(table)) {}

Var ClassEmbedding::lookup(Graph& g, std::span<const int> labels) {
  for (int c : labels) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes()) {
      throw DomainError("class label " + std::to_string(c) + " outside [0, " + std::to_string(num_classes()) +
                        ")");
    }
  }
  return gather_rows(g.param(table_), labels);
}

Var ClassEmbedding::embed(Graph& g, int c) {
  const int labels[] = {c};
  return lookup(g, labels);
}

}  // namespace crgan
