#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "crgan/autodiff.hpp"
#include "crgan/config.hpp"
#include "crgan/cr_head.hpp"
#include "crgan/gmm.hpp"
#include "crgan/nn.hpp"

namespace crgan {

using NamedTensors = std::vector<std::pair<std::string, Tensor*>>;

/// Number of classes (= mixture modes) in the conditional task.
inline constexpr std::size_t kNumClasses = 8;

/// Toy generator: latent z (concatenated with a class embedding when
/// conditional) through relu hidden layers to a linear 2D output.
class Generator {
 public:
  Generator(const RunConfig& cfg, Rng& init);

  /// `labels` must be empty for the unconditional task and hold one label per row otherwise.
  Var forward(Graph& g, const Tensor& z, std::span<const int> labels, bool training);
  /// Draws z (then labels, when conditional) from `rng` and runs an inference pass.
  SampleBatch sample(std::size_t n, Rng& rng);

  [[nodiscard]] bool conditional() const { return embedding_.has_value(); }
  [[nodiscard]] std::size_t latent_dim() const { return latent_dim_; }
  Mlp& net() { return net_; }
  ClassEmbedding* embedding() { return embedding_ ? &*embedding_ : nullptr; }

  ParameterList parameters();
  NamedTensors state_tensors();

 private:
  std::size_t latent_dim_;
  Mlp net_;
  std::optional<ClassEmbedding> embedding_;
};

/// MLP trunk producing the feature vector v_1, followed by the score head.
class Discriminator {
 public:
  Discriminator(const RunConfig& cfg, Rng& init);

  /// (B x 2) points to (B x N) scores.
  Var forward(Graph& g, Var x, std::span<const int> labels, bool training);

  Mlp& trunk() { return trunk_; }
  [[nodiscard]] std::size_t num_scores() const;
  [[nodiscard]] std::size_t head_param_count() const;

  CRHead* cr_head() { return std::get_if<CRHead>(&head_); }
  CCRHead* ccr_head() { return std::get_if<CCRHead>(&head_); }
  DenseLayer* dense_head() { return std::get_if<DenseLayer>(&head_); }

  ParameterList parameters();
  NamedTensors state_tensors();

 private:
  Mlp trunk_;
  std::variant<CRHead, CCRHead, DenseLayer> head_;
};

}  // namespace crgan
