#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dwnet {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array of doubles. The shape is fixed at construction;
/// element values may be updated in place (optimizers do this).
///
/// A default-constructed tensor is empty (rank 0, no data) and is used as
/// a "not set" marker. Every constructed tensor has strictly positive extents.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  /// Rank-2 tensor from nested row literals.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  /// Rank-1 tensor.
  static Tensor vector(std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t row, std::size_t col) { return data_[row * shape_[1] + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * shape_[1] + col]; }

  /// Same data, new shape of identical element count.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;

  /// Elementwise exact equality of shape and values.
  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// c = a * b for a[m x k], b[k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// c = a * b^T for a[m x k], b[n x k].
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// c = a^T * b for a[k x m], b[k x n].
Tensor matmul_tn(const Tensor& a, const Tensor& b);

Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Sum over rows of a rank-2 tensor: out[j] = sum_i a[i][j].
Tensor column_sum(const Tensor& a);

/// Index of the largest element in a row; ties go to the lowest index.
std::size_t argmax_row(std::span<const double> row);
std::size_t argmax_row(const Tensor& row);

/// Largest |a[i] - b[i]|; shapes must agree.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace dwnet
