#include "crgan/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crgan/errors.hpp"

namespace crgan {
namespace {

constexpr int kMaxSweeps = 100;
constexpr double kPsdTolerance = 1e-10;

double off_diagonal_norm_sq(const Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return s;
}

}  // namespace

double trace(const Tensor& a) {
  if (a.rows() != a.cols()) throw DimensionError("trace of non-square " + to_string(a.shape()));
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

Tensor symmetrize(const Tensor& a) {
  if (a.rows() != a.cols()) throw DimensionError("symmetrize of non-square " + to_string(a.shape()));
  Tensor s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

SymmetricEigen symmetric_eigen(const Tensor& input) {
  if (!input.all_finite()) throw NumericError("symmetric_eigen: non-finite input");
  Tensor a = symmetrize(input);
  const std::size_t n = a.rows();
  Tensor v = Tensor::identity(n);

  double scale_sq = 0.0;
  for (double x : a.data()) scale_sq += x * x;
  const double tol = 1e-30 * std::max(scale_sq, 1e-300);

  for (int sweep = 0; sweep < kMaxSweeps && off_diagonal_norm_sq(a) > tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that zeroes a(p, q) (Golub & Van Loan, symmetric Schur).
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{std::vector<double>(n), Tensor(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

Tensor sqrtm_psd(const Tensor& a) {
  const SymmetricEigen eig = symmetric_eigen(a);
  const std::size_t n = a.rows();
  std::vector<double> root(n);
  for (std::size_t k = 0; k < n; ++k) {
    double lambda = eig.values[k];
    if (lambda < -kPsdTolerance) {
      throw NumericError("sqrtm_psd: matrix is not positive semidefinite (eigenvalue " + std::to_string(lambda) +
                         ")");
    }
    root[k] = std::sqrt(std::max(lambda, 0.0));
  }
  Tensor out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += eig.vectors(i, k) * root[k] * eig.vectors(j, k);
      out(i, j) = acc;
    }
  return out;
}

}  // namespace crgan
