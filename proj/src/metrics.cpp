#include "crgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crgan/errors.hpp"
#include "crgan/linalg.hpp"

namespace crgan {
namespace {

constexpr double kNegativeClamp = 1e-9;

}  // namespace

GaussianMoments fit_moments(const Tensor& samples) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (d == 0 || n < 2) {
    throw DomainError("fit_moments: need at least 2 samples of dimension >= 1, got " + std::to_string(n) + "x" +
                      std::to_string(d));
  }
  GaussianMoments m{Tensor(d, 1), Tensor(d, d)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m.mu[j] += samples(i, j);
  for (std::size_t j = 0; j < d; ++j) m.mu[j] /= static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double da = samples(i, a) - m.mu[a];
      for (std::size_t b = 0; b < d; ++b) m.cov(a, b) += da * (samples(i, b) - m.mu[b]);
    }
  scale_inplace(m.cov, 1.0 / static_cast<double>(n - 1));
  m.cov = symmetrize(m.cov);
  return m;
}

double frechet_distance(const GaussianMoments& p, const GaussianMoments& q) {
  require_same_shape(p.mu, q.mu, "frechet_distance");
  require_same_shape(p.cov, q.cov, "frechet_distance");
  if (p.cov.rows() != p.mu.rows()) throw DimensionError("frechet_distance: mean and covariance disagree");

  double mean_term = 0.0;
  for (std::size_t i = 0; i < p.mu.size(); ++i) {
    const double d = p.mu[i] - q.mu[i];
    mean_term += d * d;
  }
  const Tensor root_p = sqrtm_psd(p.cov);
  sqrtm_psd(q.cov);  // validates that C_q is PSD
  const Tensor inner = symmetrize(matmul(matmul(root_p, q.cov), root_p));
  const Tensor root_inner = sqrtm_psd(inner);

  const double fd = mean_term + trace(p.cov) + trace(q.cov) - 2.0 * trace(root_inner);
  if (fd < 0.0) {
    if (fd < -kNegativeClamp) throw NumericError("frechet_distance: negative result " + std::to_string(fd));
    return 0.0;
  }
  return fd;
}

ModeReport mode_report(const Tensor& samples, const GMMSpec& spec, std::span<const int> labels) {
  const std::size_t k_modes = spec.num_modes();
  if (k_modes == 0) throw DomainError("mode_report: mixture has no modes");
  if (samples.rows() > 0 && samples.cols() != 2) {
    throw DimensionError("mode_report: samples must be (n x 2), got " + to_string(samples.shape()));
  }
  if (!labels.empty() && labels.size() != samples.rows()) {
    throw DimensionError("mode_report: label count does not match sample count");
  }
  const std::size_t n = samples.rows();
  const double radius = 3.0 * spec.sigma;

  ModeReport report;
  report.per_mode_counts.assign(k_modes, 0);
  std::size_t high_quality = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_modes; ++k) {
      const double dx = samples(i, 0) - spec.centers[k][0];
      const double dy = samples(i, 1) - spec.centers[k][1];
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2) {
        best_d2 = d2;
        best = k;
      }
    }
    if (std::sqrt(best_d2) <= radius) {
      ++high_quality;
      ++report.per_mode_counts[best];
    }
    if (!labels.empty() && labels[i] == static_cast<int>(best)) ++correct;
  }

  const double threshold = std::max(20.0, 0.2 * static_cast<double>(n) / static_cast<double>(k_modes));
  report.modes_covered = static_cast<int>(std::count_if(report.per_mode_counts.begin(), report.per_mode_counts.end(),
                                                        [&](int c) { return static_cast<double>(c) >= threshold; }));
  report.high_quality_fraction = n == 0 ? 0.0 : static_cast<double>(high_quality) / static_cast<double>(n);
  if (!labels.empty()) report.class_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return report;
}

}  // namespace crgan
