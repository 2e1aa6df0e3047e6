#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "core/common.hpp"

namespace bgn {

/// Row-major real-valued matrix. Carrier for latent weights, pre-activations
/// and gradients. Entries must stay finite; constructors that take user data
/// reject NaN/Inf, compute paths re-check after optimizer updates.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static DenseMatrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  std::span<double> row_span(std::size_t i) {
    return {row(i), cols_};
  }
  std::span<const double> row_span(std::size_t i) const {
    return {row(i), cols_};
  }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  /// Textbook dot-product matmul; this is the reference real-valued path the
  /// bit-packed kernels are measured against.
  DenseMatrix matmul(const DenseMatrix& other) const;
  /// this^T * other, without materializing the transpose.
  DenseMatrix matmul_transposed_self(const DenseMatrix& other) const;
  /// this * other^T.
  DenseMatrix matmul_transposed_other(const DenseMatrix& other) const;
  DenseMatrix transposed() const;

  void fill(double v);
  void add_scaled(const DenseMatrix& other, double scale);
  void scale(double s);

  bool all_finite() const;
  void ensure_finite(const char* what) const;

  bool operator==(const DenseMatrix& other) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

}  // namespace bgn
