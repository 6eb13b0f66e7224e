#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uglad/matrix.hpp"

namespace uglad {

/// Sample matrix (rows = samples, columns = features) with an optional
/// missingness mask. Missing entries hold NaN in `values`.
struct Dataset {
  Matrix values;
  std::vector<std::uint8_t> missing;  // rows*cols, empty when complete
  std::vector<std::string> features;

  /// Complete dataset; names default to x1..xD.
  static Dataset from_matrix(Matrix values, std::vector<std::string> features = {});

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
  bool has_missing() const;
  bool is_missing(std::size_t i, std::size_t j) const {
    return !missing.empty() && missing[i * cols() + j] != 0;
  }
  std::size_t missing_count() const;
  std::vector<std::size_t> row_missing_counts() const;
};

std::vector<std::string> default_feature_names(std::size_t d);

/// (1/M) (X - mean)^T (X - mean), symmetrized. Throws MissingData when the
/// mask is non-empty.
Matrix covariance(const Dataset& x);
Matrix covariance(const Matrix& x);
/// Covariance of the selected rows only.
Matrix covariance(const Matrix& x, std::span<const std::size_t> rows);

/// Throws DegenerateData naming the first feature whose variance vanishes
/// relative to the largest one.
void check_feature_variance(const Matrix& s);

/// Replaces each missing entry by the mean of the observed entries of its
/// column. Throws EmptyColumn when a column has no observed entry.
Dataset mean_impute(const Dataset& x);

/// Marks exactly round(fraction * M * D) uniformly chosen entries missing.
Dataset inject_dropout(const Dataset& x, double fraction, std::uint64_t seed);

Dataset select_rows(const Dataset& x, std::span<const std::size_t> rows);

}  // namespace uglad
