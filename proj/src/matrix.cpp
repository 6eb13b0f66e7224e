#include "uglad/matrix.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "uglad/errors.hpp"

namespace uglad {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) {
  return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}
MutMap view(Matrix& m) {
  return MutMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                static_cast<Eigen::Index>(m.cols()));
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                    "x" + std::to_string(b.cols()));
  }
}

}  // namespace

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::EmptyColumn: return "EmptyColumn";
    case ErrorCode::MissingData: return "MissingData";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
  }
  return "Unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::ShapeMismatch, "matrix data length does not match shape");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) {
      throw Error(ErrorCode::ShapeMismatch, "ragged matrix literal");
    }
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

double Matrix::item() const {
  if (rows_ != 1 || cols_ != 1) {
    throw Error(ErrorCode::ShapeMismatch, "item() requires a 1x1 matrix");
  }
  return data_[0];
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "add");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "subtract");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double factor) {
  for (double& v : data_) v *= factor;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double factor) { return a *= factor; }
Matrix operator*(double factor, Matrix a) { return a *= factor; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "matmul: inner dimensions differ");
  }
  Matrix c(a.rows(), b.cols());
  view(c).noalias() = view(a) * view(b);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "matmul_nt: inner dimensions differ");
  }
  Matrix c(a.rows(), b.rows());
  view(c).noalias() = view(a) * view(b).transpose();
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "matmul_tn: inner dimensions differ");
  }
  Matrix c(a.cols(), b.cols());
  view(c).noalias() = view(a).transpose() * view(b);
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) c[k] = a[k] * b[k];
  return c;
}

double inner(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "inner");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double trace(const Matrix& a) {
  double s = 0.0;
  const std::size_t n = std::min(a.rows(), a.cols());
  for (std::size_t i = 0; i < n; ++i) s += a(i, i);
  return s;
}

double sum(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

Matrix symmetrize(const Matrix& a) {
  if (!a.is_square()) throw Error(ErrorCode::ShapeMismatch, "symmetrize: not square");
  Matrix s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    s(i, i) = a(i, i);
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (!a.is_square()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * std::max(1.0, std::abs(a(i, j))))
        return false;
  return true;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix permute_symmetric(const Matrix& a, std::span<const std::size_t> perm) {
  if (!a.is_square() || perm.size() != a.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "permute_symmetric: permutation size");
  }
  Matrix b(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) b(perm[i], perm[j]) = a(i, j);
  return b;
}

}  // namespace uglad
