#include "crgan/cr_head.hpp"

#include "crgan/errors.hpp"

namespace crgan {
namespace {

void check_rows_nondegenerate(const Tensor& u, const char* where) {
  for (std::size_t r = 0; r < u.rows(); ++r) {
    const auto row = u.row_span(r);
    const double nsq = dot(row, row);
    if (!(nsq > kDegenerateNormSq)) {
      throw DegenerateWeightError(std::string(where) + ": stage weight in row " + std::to_string(r) +
                                  " has squared norm " + std::to_string(nsq) + " <= 1e-12");
    }
  }
}

Cascade run_cascade(Var v1, std::size_t num_stages, auto&& stage_weight) {
  Cascade out;
  std::vector<Var> scores;
  Var v = v1;
  for (std::size_t i = 0; i < num_stages; ++i) {
    Var u = stage_weight(i);
    check_rows_nondegenerate(u.value(), "cascade");
    out.features.push_back(v);
    out.stage_weights.push_back(u);
    scores.push_back(row_sum(mul(v, u)));
    if (i + 1 < num_stages) v = reject_rows(v, u);
  }
  out.scores = concat_cols(scores);
  return out;
}

}  // namespace

Var reject_rows(Var v, Var u) {
  check_rows_nondegenerate(u.value(), "reject");
  Var along = row_sum(mul(v, u));
  Var norm_sq = row_sum(mul(u, u));
  return sub(v, mul_col(u, div(along, norm_sq)));
}

Var reject(Var v, Var w) {
  if (v.value().cols() != 1 || w.value().cols() != 1 || v.value().rows() != w.value().rows()) {
    throw DimensionError("reject: expected equal-length column vectors, got " + to_string(v.shape()) + " and " +
                         to_string(w.shape()));
  }
  return transpose(reject_rows(transpose(v), transpose(w)));
}

Tensor reject(const Tensor& v, const Tensor& w) {
  Graph g;
  return reject(g.constant(v), g.constant(w)).value();
}

// ---------------------------------------------------------------------------
// CRHead

CRHead::CRHead(std::size_t num_scores, std::size_t feature_dim, bool spectral_norm, Rng& rng)
    : spectral_norm_(spectral_norm) {
  if (num_scores == 0 || feature_dim == 0) throw DomainError("CR head needs N >= 1 and C_L >= 1");
  Tensor w(num_scores, feature_dim);
  for (std::size_t i = 0; i < num_scores; ++i) {
    const Tensor row = glorot_uniform(1, feature_dim, feature_dim, 1, rng);
    std::copy(row.data().begin(), row.data().end(), w.row_span(i).begin());
    sn_u_.push_back(random_unit_vector(1, rng));
  }
  weights_ = Parameter("head.weight", std::move(w));
  last_sigma_.assign(num_scores, 1.0);
}

CRHead::CRHead(Tensor weights, bool spectral_norm) : spectral_norm_(spectral_norm) {
  if (weights.rows() == 0 || weights.cols() == 0) throw DomainError("CR head needs N >= 1 and C_L >= 1");
  sn_u_.assign(weights.rows(), Tensor::scalar(1.0));
  last_sigma_.assign(weights.rows(), 1.0);
  weights_ = Parameter("head.weight", std::move(weights));
}

std::vector<Var> CRHead::stage_rows(Graph& g, bool training) {
  Var w = g.param(weights_);
  std::vector<Var> rows;
  for (std::size_t i = 0; i < num_scores(); ++i) {
    Var row = slice_rows(w, i, i + 1);
    if (spectral_norm_) {
      check_rows_nondegenerate(row.value(), "CR head");
      if (!sigma_frozen_) last_sigma_[i] = power_iteration(row.value(), sn_u_[i], training);
      row = scale(row, 1.0 / last_sigma_[i]);
    }
    rows.push_back(row);
  }
  return rows;
}

Cascade CRHead::cascade(Graph& g, Var v1, bool training) {
  const Tensor& v = v1.value();
  if (v.cols() != feature_dim()) {
    throw DimensionError("CR head: features " + to_string(v.shape()) + " do not match C_L = " +
                         std::to_string(feature_dim()));
  }
  const std::vector<Var> rows = stage_rows(g, training);
  const std::size_t batch = v.rows();
  return run_cascade(v1, num_scores(), [&](std::size_t i) { return broadcast_rows(rows[i], batch); });
}

Tensor CRHead::forward(const Tensor& v1) {
  Graph g;
  return forward(g, g.constant(v1), false).value();
}

void CRHead::warm_up(int iterations) {
  for (std::size_t i = 0; i < num_scores(); ++i) {
    Tensor row(1, feature_dim());
    std::copy(weights_.value.row_span(i).begin(), weights_.value.row_span(i).end(), row.data().begin());
    for (int k = 0; k < iterations; ++k) last_sigma_[i] = power_iteration(row, sn_u_[i], true);
  }
}

// ---------------------------------------------------------------------------
// CCRHead

CCRHead::CCRHead(std::size_t num_scores, std::size_t feature_dim, std::size_t num_classes, bool spectral_norm,
                 Rng& rng)
    : base_(num_scores, feature_dim, spectral_norm, rng) {
  if (num_classes == 0) throw DomainError("conditional head needs at least one class");
  for (std::size_t i = 0; i < num_scores; ++i) {
    embeddings_.emplace_back("head.embed." + std::to_string(i), num_classes, feature_dim, rng);
  }
}

CCRHead::CCRHead(Tensor weights, std::vector<Tensor> class_tables, bool spectral_norm)
    : base_(std::move(weights), spectral_norm) {
  if (class_tables.size() != base_.num_scores()) {
    throw DimensionError("conditional head: " + std::to_string(class_tables.size()) + " class tables for N = " +
                         std::to_string(base_.num_scores()));
  }
  for (std::size_t i = 0; i < class_tables.size(); ++i) {
    if (class_tables[i].cols() != base_.feature_dim() || class_tables[i].rows() != class_tables[0].rows()) {
      throw DimensionError("conditional head: class table " + std::to_string(i) + " has shape " +
                           to_string(class_tables[i].shape()));
    }
    embeddings_.emplace_back("head.embed." + std::to_string(i), std::move(class_tables[i]));
  }
}

Cascade CCRHead::cascade(Graph& g, Var v1, std::span<const int> labels, bool training) {
  const Tensor& v = v1.value();
  if (v.cols() != feature_dim()) {
    throw DimensionError("cCR head: features " + to_string(v.shape()) + " do not match C_L = " +
                         std::to_string(feature_dim()));
  }
  if (labels.size() != v.rows()) {
    throw DimensionError("cCR head: " + std::to_string(labels.size()) + " labels for a batch of " +
                         std::to_string(v.rows()));
  }
  const std::vector<Var> rows = base_.stage_rows(g, training);
  const std::size_t batch = v.rows();
  return run_cascade(v1, num_scores(), [&](std::size_t i) {
    return add(broadcast_rows(rows[i], batch), embeddings_[i].lookup(g, labels));
  });
}

Tensor CCRHead::forward(const Tensor& v1, std::span<const int> labels) {
  Graph g;
  return forward(g, g.constant(v1), labels, false).value();
}

std::size_t CCRHead::param_count() const {
  std::size_t n = base_.param_count();
  for (const auto& e : embeddings_) n += e.table().value.size();
  return n;
}

ParameterList CCRHead::parameters() {
  ParameterList out = base_.parameters();
  for (auto& e : embeddings_) out.push_back(&e.table());
  return out;
}

std::size_t param_overhead(std::size_t num_scores, std::size_t feature_dim) {
  if (num_scores == 0 || feature_dim == 0) throw DomainError("param_overhead needs N >= 1 and C_L >= 1");
  return (num_scores - 1) * feature_dim;
}

}  // namespace crgan
