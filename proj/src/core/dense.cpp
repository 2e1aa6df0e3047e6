#include "core/dense.hpp"

#include <cmath>

namespace bgn {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, Errc::dim_mismatch,
          "DenseMatrix: data length does not match rows*cols");
  ensure_finite("DenseMatrix construction");
}

DenseMatrix DenseMatrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    require(row.size() == c, Errc::dim_mismatch,
            "from_rows: ragged row lengths");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::matmul(const DenseMatrix& other) const {
  require(cols_ == other.rows_, Errc::dim_mismatch,
          "matmul: inner dimensions disagree");
  DenseMatrix out(rows_, other.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* a = row(i);
    for (std::size_t j = 0; j < other.cols_; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < cols_; ++k) {
        acc += a[k] * other(k, j);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

DenseMatrix DenseMatrix::matmul_transposed_self(const DenseMatrix& other) const {
  require(rows_ == other.rows_, Errc::dim_mismatch,
          "matmul_transposed_self: row counts disagree");
  DenseMatrix out(cols_, other.cols_);
  for (std::size_t k = 0; k < rows_; ++k) {
    const double* a = row(k);
    const double* b = other.row(k);
    for (std::size_t i = 0; i < cols_; ++i) {
      double ai = a[i];
      if (ai == 0.0) continue;
      double* o = out.row(i);
      for (std::size_t j = 0; j < other.cols_; ++j) o[j] += ai * b[j];
    }
  }
  return out;
}

DenseMatrix DenseMatrix::matmul_transposed_other(const DenseMatrix& other) const {
  require(cols_ == other.cols_, Errc::dim_mismatch,
          "matmul_transposed_other: column counts disagree");
  DenseMatrix out(rows_, other.rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* a = row(i);
    for (std::size_t j = 0; j < other.rows_; ++j) {
      const double* b = other.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < cols_; ++k) acc += a[k] * b[k];
      out(i, j) = acc;
    }
  }
  return out;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* a = row(i);
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = a[j];
  }
  return out;
}

void DenseMatrix::fill(double v) {
  for (auto& x : data_) x = v;
}

void DenseMatrix::add_scaled(const DenseMatrix& other, double scale) {
  require(rows_ == other.rows_ && cols_ == other.cols_, Errc::dim_mismatch,
          "add_scaled: shapes disagree");
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] += scale * other.data_[i];
}

void DenseMatrix::scale(double s) {
  for (auto& x : data_) x *= s;
}

bool DenseMatrix::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void DenseMatrix::ensure_finite(const char* what) const {
  if (!all_finite())
    fail(Errc::non_finite, std::string(what) + ": non-finite entry");
}

}  // namespace bgn
