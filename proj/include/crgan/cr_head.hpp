#pragma once

// Cascading-rejection discriminator heads.
//
// A plain score layer reads a feature vector v through a single inner product
// s = w^T v and is blind to everything orthogonal to w. The cascade keeps going:
//
//     s_i     = w_i^T v_i
//     v_{i+1} = v_i - (w_i^T v_i / w_i^T w_i) w_i        (rejection of v_i from w_i)
//
// so stage i+1 only sees what every earlier stage ignored. N stages yield N
// scores from one feature vector. N = 1 is exactly the plain score layer.
//
// The conditional head replaces each w_i with w_i + w_{c,i}, where w_{c,i} is a
// per-class embedding; for N = 1 that is the projection-discriminator score
// v^T (w + w_c).
//
// Batches are row-major: v1 is (B x C_L) and scores are (B x N).

#include <cstddef>
#include <span>
#include <vector>

#include "crgan/autodiff.hpp"
#include "crgan/nn.hpp"
#include "crgan/parameter.hpp"
#include "crgan/rng.hpp"

namespace crgan {

/// Stage weights with squared norm at or below this are rejected as degenerate.
inline constexpr double kDegenerateNormSq = 1e-12;

/// Row-wise rejection: row b of the result is v_b - (u_b.v_b / u_b.u_b) u_b.
/// Throws DegenerateWeightError when some u_b.u_b <= kDegenerateNormSq.
Var reject_rows(Var v, Var u);

/// Rejection of column vector v from column vector w; differentiable in both.
Var reject(Var v, Var w);
Tensor reject(const Tensor& v, const Tensor& w);

/// Intermediate quantities of one cascade pass.
struct Cascade {
  Var scores;                      // (B x N)
  std::vector<Var> features;       // v_1 .. v_N, each (B x C_L)
  std::vector<Var> stage_weights;  // effective w_i (or w_i + w_{c,i}), each (B x C_L)
};

class CRHead {
 public:
  CRHead() = default;
  /// Independent Glorot-uniform rows, each treated as its own (1 x C_L) layer.
  CRHead(std::size_t num_scores, std::size_t feature_dim, bool spectral_norm, Rng& rng);
  /// Rows of `weights` are w_1 .. w_N.
  explicit CRHead(Tensor weights, bool spectral_norm = false);

  Cascade cascade(Graph& g, Var v1, bool training);
  Var forward(Graph& g, Var v1, bool training) { return cascade(g, v1, training).scores; }
  /// Inference pass on plain tensors (spectral-norm state is not advanced).
  Tensor forward(const Tensor& v1);

  [[nodiscard]] std::size_t num_scores() const { return weights_.value.rows(); }
  [[nodiscard]] std::size_t feature_dim() const { return weights_.value.cols(); }
  [[nodiscard]] bool spectral_norm() const { return spectral_norm_; }
  [[nodiscard]] std::size_t param_count() const { return weights_.value.size(); }

  Parameter& weights() { return weights_; }
  [[nodiscard]] const Parameter& weights() const { return weights_; }
  /// One (1 x 1) power-iteration vector per row.
  std::vector<Tensor>& sn_u() { return sn_u_; }
  [[nodiscard]] const std::vector<Tensor>& sn_u() const { return sn_u_; }

  void warm_up(int iterations);
  void freeze_sigma(bool frozen) { sigma_frozen_ = frozen; }

  ParameterList parameters() { return {&weights_}; }

 private:
  friend class CCRHead;
  /// Effective (1 x C_L) stage weights, spectrally normalized per row when enabled.
  std::vector<Var> stage_rows(Graph& g, bool training);

  Parameter weights_;
  std::vector<Tensor> sn_u_;
  std::vector<double> last_sigma_;
  bool spectral_norm_ = false;
  bool sigma_frozen_ = false;
};

class CCRHead {
 public:
  CCRHead() = default;
  CCRHead(std::size_t num_scores, std::size_t feature_dim, std::size_t num_classes, bool spectral_norm, Rng& rng);
  /// `class_tables[i]` is the (num_classes x C_L) table of w_{c,i}.
  CCRHead(Tensor weights, std::vector<Tensor> class_tables, bool spectral_norm = false);

  Cascade cascade(Graph& g, Var v1, std::span<const int> labels, bool training);
  Var forward(Graph& g, Var v1, std::span<const int> labels, bool training) {
    return cascade(g, v1, labels, training).scores;
  }
  Tensor forward(const Tensor& v1, std::span<const int> labels);

  [[nodiscard]] std::size_t num_scores() const { return base_.num_scores(); }
  [[nodiscard]] std::size_t feature_dim() const { return base_.feature_dim(); }
  [[nodiscard]] std::size_t num_classes() const { return embeddings_.empty() ? 0 : embeddings_[0].num_classes(); }
  [[nodiscard]] std::size_t param_count() const;

  CRHead& base() { return base_; }
  [[nodiscard]] const CRHead& base() const { return base_; }
  std::vector<ClassEmbedding>& embeddings() { return embeddings_; }
  [[nodiscard]] const std::vector<ClassEmbedding>& embeddings() const { return embeddings_; }

  ParameterList parameters();

 private:
  CRHead base_;
  std::vector<ClassEmbedding> embeddings_;
};

/// Extra head parameters of an N-score cascade over a plain score layer: (N-1) * C_L.
std::size_t param_overhead(std::size_t num_scores, std::size_t feature_dim);

}  // namespace crgan
