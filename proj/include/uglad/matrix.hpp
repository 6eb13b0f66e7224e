#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace uglad {

/// Dense row-major matrix of doubles. Scalars are represented as 1x1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix scalar(double value) { return Matrix(1, 1, value); }
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  /// Value of a 1x1 matrix.
  double item() const;

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double factor);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double factor);
Matrix operator*(double factor, Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);

/// Sum of a(i,j) * b(i,j).
double inner(const Matrix& a, const Matrix& b);
double trace(const Matrix& a);
double sum(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// (A + A^T) / 2
Matrix symmetrize(const Matrix& a);
bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);
bool all_finite(const Matrix& a);

/// P * A * P^T for the permutation mapping index i to perm[i].
Matrix permute_symmetric(const Matrix& a, std::span<const std::size_t> perm);

}  // namespace uglad
