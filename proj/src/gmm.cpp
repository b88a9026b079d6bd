#include "crgan/gmm.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "crgan/errors.hpp"

namespace crgan {

void GMMSpec::validate() const {
  if (centers.empty()) throw DomainError("GMM needs at least one mode");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("GMM sigma must be finite and >= 0");
  if (weights.size() != centers.size()) throw DomainError("GMM weights and centers differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("GMM weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("GMM weights sum to " + std::to_string(total));
}

GMMSpec ring8(double radius, double sigma, bool labeled) {
  GMMSpec spec;
  for (int k = 0; k < 8; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / 8.0;
    spec.centers.push_back({radius * std::cos(angle), radius * std::sin(angle)});
  }
  spec.sigma = sigma;
  spec.weights.assign(8, 1.0 / 8.0);
  spec.labeled = labeled;
  return spec;
}

SampleBatch sample(const GMMSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  SampleBatch out{Tensor(n, 2), {}};
  if (spec.labeled) out.labels.resize(n);
  const std::size_t k_modes = spec.num_modes();
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    std::size_t k = 0;
    double cumulative = spec.weights[0];
    while (u >= cumulative && k + 1 < k_modes) cumulative += spec.weights[++k];
    const auto [z0, z1] = rng.normal_pair();
    out.points(i, 0) = spec.centers[k][0] + spec.sigma * z0;
    out.points(i, 1) = spec.centers[k][1] + spec.sigma * z1;
    if (spec.labeled) out.labels[i] = static_cast<int>(k);
  }
  return out;
}

Tensor sample_latent(const LatentSpec& spec, std::size_t n, Rng& rng) {
  if (spec.dim == 0) throw DomainError("latent dimension must be >= 1");
  Tensor z(n, spec.dim);
  auto data = z.data();
  for (std::size_t i = 0; i < data.size(); i += 2) {
    const auto [a, b] = rng.normal_pair();
    data[i] = a;
    if (i + 1 < data.size()) data[i + 1] = b;
  }
  return z;
}

std::vector<int> sample_labels(std::size_t num_classes, std::size_t n, Rng& rng) {
  if (num_classes == 0) throw DomainError("need at least one class");
  std::vector<int> labels(n);
  for (auto& c : labels) {
    c = static_cast<int>(rng.next_u64() % num_classes);
  }
  return labels;
}

void write_points_csv(const std::filesystem::path& path, const Tensor& points, std::span<const int> labels) {
  if (points.cols() != 2 && points.size() != 0) {
    throw DimensionError("points must be (n x 2), got " + to_string(points.shape()));
  }
  if (!labels.empty() && labels.size() != points.rows()) {
    throw DimensionError("label count does not match point count");
  }
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << (labels.empty() ? "x,y\n" : "x,y,label\n");
  for (std::size_t i = 0; i < points.rows(); ++i) {
    os << fmt::format("{},{}", points(i, 0), points(i, 1));
    if (!labels.empty()) os << ',' << labels[i];
    os << '\n';
  }
  if (!os) throw Error("write to '" + path.string() + "' failed");
}

SampleBatch read_points_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path.string() + "'");
  std::string header;
  std::getline(is, header);
  const bool labeled = header == "x,y,label";
  if (!labeled && header != "x,y") throw DomainError("unexpected header '" + header + "' in " + path.string());
  std::vector<double> data;
  std::vector<int> labels;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string x, y, c;
    std::getline(ls, x, ',');
    std::getline(ls, y, ',');
    data.push_back(std::stod(x));
    data.push_back(std::stod(y));
    if (labeled) {
      std::getline(ls, c, ',');
      labels.push_back(std::stoi(c));
    }
  }
  const std::size_t n = data.size() / 2;
  return {Tensor(n, 2, std::move(data)), std::move(labels)};
}

}  // namespace crgan
