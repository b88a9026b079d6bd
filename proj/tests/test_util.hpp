#pragma once

#include <Eigen/Dense>

#include "crgan/rng.hpp"
#include "crgan/tensor.hpp"

namespace crgan::testing {

inline Tensor random_tensor(std::size_t r, std::size_t c, double lo, double hi, Rng& rng) {
  Tensor t(r, c);
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

inline Eigen::MatrixXd to_eigen(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t(r, c);
  return m;
}

inline Tensor from_eigen(const Eigen::MatrixXd& m) {
  Tensor t(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
  return t;
}

/// Largest singular value from a self-adjoint eigen-solve of W^T W.
inline double largest_singular_value(const Tensor& w) {
  const Eigen::MatrixXd m = to_eigen(w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace crgan::testing
