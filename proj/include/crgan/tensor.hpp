#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace crgan {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  [[nodiscard]] std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(Shape s);

/// Dense row-major matrix of doubles. Column vectors are (n, 1), scalars (1, 1).
/// Batched activations put one sample per row.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor column(std::vector<double> v);
  static Tensor row(std::vector<double> v);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.rows(), t.cols()); }

  [[nodiscard]] std::size_t rows() const { return shape_.rows; }
  [[nodiscard]] std::size_t cols() const { return shape_.cols; }
  [[nodiscard]] Shape shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }
  [[nodiscard]] bool is_scalar() const { return shape_.rows == 1 && shape_.cols == 1; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_.cols + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  [[nodiscard]] std::span<const double> data() const { return data_; }
  std::span<double> row_span(std::size_t r) { return {data_.data() + r * shape_.cols, shape_.cols}; }
  [[nodiscard]] std::span<const double> row_span(std::size_t r) const {
    return {data_.data() + r * shape_.cols, shape_.cols};
  }

  /// Value of a 1x1 tensor.
  [[nodiscard]] double item() const;
  [[nodiscard]] bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Raw kernels. All reductions accumulate in index order starting from 0.0, so a
// dot product computed by any of them is bitwise identical to a plain loop.

/// a (m x k) times b (k x n).
Tensor matmul(const Tensor& a, const Tensor& b);
/// a (m x k) times b^T where b is (n x k).
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// a^T times b where a is (k x m) and b is (k x n).
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Rows of `top` followed by rows of `bottom`.
Tensor vstack(const Tensor& top, const Tensor& bottom);

void add_inplace(Tensor& dst, const Tensor& src);
void scale_inplace(Tensor& t, double factor);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double max_abs_diff(const Tensor& a, const Tensor& b);

/// Throws DimensionError naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace crgan
