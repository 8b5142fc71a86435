#include "dualcap/matrix.hpp"

#include <cmath>

#include "dualcap/error.hpp"

namespace dualcap {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DimensionError("matrix of shape " + shape_string() + " given " +
                         std::to_string(values_.size()) + " values");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double value) {
  for (auto& v : values_) v = value;
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch: " + a.shape_string() + " x " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw DimensionError("matvec shape mismatch: " + a.shape_string() + " x (" +
                         std::to_string(x.size()) + ")");
  }
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Vector matvec_transposed(const Matrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) {
    throw DimensionError("transposed matvec shape mismatch: " + a.shape_string() + "^T x (" +
                         std::to_string(x.size()) + ")");
  }
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) y[j] += r[j] * xi;
  }
  return y;
}

void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v, double scale) {
  if (a.rows() != u.size() || a.cols() != v.size()) {
    throw DimensionError("outer product (" + std::to_string(u.size()) + ")x(" +
                         std::to_string(v.size()) + ") does not fit " + a.shape_string());
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double ui = scale * u[i];
    if (ui == 0.0) continue;
    auto r = a.row(i);
    for (std::size_t j = 0; j < v.size(); ++j) r[j] += ui * v[j];
  }
}

double squared_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace dualcap
