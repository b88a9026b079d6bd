#pragma once

#include <vector>

#include "crgan/tensor.hpp"

namespace crgan {

/// A = V diag(values) V^T with orthonormal eigenvector columns in V.
struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Tensor vectors;              // column k belongs to values[k]
};

/// Cyclic Jacobi rotations on a symmetric matrix. The input is symmetrized first.
SymmetricEigen symmetric_eigen(const Tensor& a);

/// Principal square root of a symmetric positive semidefinite matrix.
/// Eigenvalues in [-1e-10, 0) are clamped to zero; anything more negative throws
/// NumericError.
Tensor sqrtm_psd(const Tensor& a);

double trace(const Tensor& a);
Tensor symmetrize(const Tensor& a);

}  // namespace crgan
