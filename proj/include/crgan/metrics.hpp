#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "crgan/gmm.hpp"
#include "crgan/tensor.hpp"

namespace crgan {

struct GaussianMoments {
  Tensor mu;   // (d x 1)
  Tensor cov;  // (d x d), symmetric
};

/// Sample mean and unbiased (1/(n-1)) covariance of the rows of `samples`.
/// Needs at least 2 rows.
GaussianMoments fit_moments(const Tensor& samples);

/// Frechet (Wasserstein-2) distance between two Gaussians:
///   |mu_p - mu_q|^2 + tr(C_p) + tr(C_q) - 2 tr( sqrt( C_p^{1/2} C_q C_p^{1/2} ) )
/// The symmetric inner product has the same eigenvalues as C_p C_q, so the trace
/// term equals tr((C_p C_q)^{1/2}) for PSD inputs.
/// Results in [-1e-9, 0) clamp to 0; more negative values throw NumericError.
double frechet_distance(const GaussianMoments& p, const GaussianMoments& q);

/// Mode-coverage statistics of 2D samples against a mixture.
struct ModeReport {
  int modes_covered = 0;
  double high_quality_fraction = 0.0;
  std::vector<int> per_mode_counts;
  std::optional<double> class_accuracy;
};

/// A sample is high quality when its nearest center lies within 3 sigma. A mode is
/// covered when it collects at least max(20, 0.2 n / K) high-quality samples.
/// With labels, class_accuracy is the fraction of samples whose nearest center
/// equals the conditioning label.
ModeReport mode_report(const Tensor& samples, const GMMSpec& spec, std::span<const int> labels = {});

}  // namespace crgan
