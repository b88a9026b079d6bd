#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "crgan/rng.hpp"
#include "crgan/tensor.hpp"

namespace crgan {

using Point2 = std::array<double, 2>;

/// Isotropic 2D Gaussian mixture with a shared standard deviation.
struct GMMSpec {
  std::vector<Point2> centers;
  double sigma = 0.05;
  std::vector<double> weights;
  bool labeled = false;

  [[nodiscard]] std::size_t num_modes() const { return centers.size(); }
  /// Throws DomainError unless K >= 1, sigma >= 0, and the weights form a distribution.
  void validate() const;
};

/// Eight modes on a circle of the given radius at angles 2*pi*k/8, uniform weights.
GMMSpec ring8(double radius = 2.0, double sigma = 0.05, bool labeled = false);

struct LatentSpec {
  std::size_t dim = 2;
};

/// Points are (n x 2); labels hold the generating mode index when the spec is labeled.
struct SampleBatch {
  Tensor points;
  std::vector<int> labels;
};

SampleBatch sample(const GMMSpec& spec, std::size_t n, Rng& rng);

/// (n x dim) standard-normal matrix.
Tensor sample_latent(const LatentSpec& spec, std::size_t n, Rng& rng);

/// n labels drawn uniformly from [0, num_classes).
std::vector<int> sample_labels(std::size_t num_classes, std::size_t n, Rng& rng);

/// CSV with header `x,y` or `x,y,label`; values printed round-trip exact.
void write_points_csv(const std::filesystem::path& path, const Tensor& points, std::span<const int> labels = {});
SampleBatch read_points_csv(const std::filesystem::path& path);

}  // namespace crgan
