#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "crgan/autodiff.hpp"
#include "crgan/parameter.hpp"
#include "crgan/rng.hpp"

namespace crgan {

/// Glorot/Xavier uniform: U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Random unit column vector of length n.
Tensor random_unit_vector(std::size_t n, Rng& rng);

/// Power-iteration estimate of the largest singular value of `w`.
///
/// With `advance` set, `u` first moves one step (v = W^T u / |W^T u|,
/// u = W v / |W v|); the estimate is u^T W v either way. `u` stays unit norm.
double power_iteration(const Tensor& w, Tensor& u, bool advance);

struct Activation {
  enum class Kind { none, relu, leaky_relu, tanh, sigmoid };
  Kind kind = Kind::none;
  double alpha = 0.1;

  static Activation none() { return {Kind::none, 0.0}; }
  static Activation relu() { return {Kind::relu, 0.0}; }
  static Activation leaky(double a = 0.1) { return {Kind::leaky_relu, a}; }
  static Activation tanh() { return {Kind::tanh, 0.0}; }
};

Var activate(Var x, Activation act);

/// Fully-connected layer y = x W_eff^T + b on row-major batches (one sample per row).
///
/// With spectral normalization W_eff = W / sigma, where sigma comes from a
/// persistent power-iteration vector. A training forward advances that vector by
/// exactly one step before sigma is read. sigma enters the graph as a constant,
/// so no gradient flows through the normalizer.
class DenseLayer {
 public:
  DenseLayer(std::string name, std::size_t in, std::size_t out, bool spectral_norm, Rng& rng,
             bool bias = true);

  Var forward(Graph& g, Var x, bool training);

  [[nodiscard]] std::size_t in_dim() const { return weight_.value.cols(); }
  [[nodiscard]] std::size_t out_dim() const { return weight_.value.rows(); }
  [[nodiscard]] bool spectral_norm() const { return spectral_norm_; }
  [[nodiscard]] bool has_bias() const { return has_bias_; }

  Parameter& weight() { return weight_; }
  [[nodiscard]] const Parameter& weight() const { return weight_; }
  Parameter& bias() { return bias_; }
  [[nodiscard]] const Parameter& bias() const { return bias_; }
  Tensor& sn_u() { return sn_u_; }
  [[nodiscard]] const Tensor& sn_u() const { return sn_u_; }

  /// Runs `iterations` power-iteration steps without touching the weights.
  void warm_up(int iterations);
  /// W / sigma using the current power-iteration vector (W itself when SN is off).
  [[nodiscard]] Tensor effective_weight() const;
  [[nodiscard]] double last_sigma() const { return last_sigma_; }
  /// Reuse the last sigma instead of recomputing it; for finite-difference checks.
  void freeze_sigma(bool frozen) { sigma_frozen_ = frozen; }

  ParameterList parameters();

 private:
  double sigma_for_forward(bool training);

  Parameter weight_;
  Parameter bias_;
  Tensor sn_u_;
  bool spectral_norm_;
  bool has_bias_;
  bool sigma_frozen_ = false;
  double last_sigma_ = 1.0;
};

struct LayerSpec {
  std::size_t width;
  Activation activation;
};

/// Stack of dense layers, each followed by its activation.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, std::size_t in, std::span<const LayerSpec> layers, bool spectral_norm, Rng& rng);

  /// When `preactivations` is given, each layer's pre-activation output is appended to it.
  Var forward(Graph& g, Var x, bool training, std::vector<Tensor>* preactivations = nullptr);

  [[nodiscard]] std::size_t in_dim() const { return in_; }
  [[nodiscard]] std::size_t out_dim() const { return layers_.empty() ? in_ : layers_.back().out_dim(); }
  [[nodiscard]] std::size_t depth() const { return layers_.size(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  [[nodiscard]] const std::vector<DenseLayer>& layers() const { return layers_; }
  [[nodiscard]] const std::vector<Activation>& activations() const { return activations_; }

  ParameterList parameters();

 private:
  std::size_t in_ = 0;
  std::vector<DenseLayer> layers_;
  std::vector<Activation> activations_;
};

/// Lookup table of per-class vectors.
class ClassEmbedding {
 public:
  ClassEmbedding() = default;
  ClassEmbedding(std::string name, std::size_t num_classes, std::size_t dim, Rng& rng);
  ClassEmbedding(std::string name, Tensor table);

  /// Row `labels[k]` of the table becomes row k of the result; rows receive gradients.
  Var lookup(Graph& g, std::span<const int> labels);
  /// Row c as a (1 x dim) variable.
  Var embed(Graph& g, int c);

  [[nodiscard]] std::size_t num_classes() const { return table_.value.rows(); }
  [[nodiscard]] std::size_t dim() const { return table_.value.cols(); }
  Parameter& table() { return table_; }
  [[nodiscard]] const Parameter& table() const { return table_; }

 private:
  Parameter table_;
};

}  // namespace crgan
