#include "uglad/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uglad/errors.hpp"
#include "uglad/random.hpp"

namespace uglad {

std::vector<std::string> default_feature_names(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

Dataset Dataset::from_matrix(Matrix values, std::vector<std::string> features) {
  Dataset ds;
  if (features.empty()) features = default_feature_names(values.cols());
  if (features.size() != values.cols()) {
    throw Error(ErrorCode::LengthMismatch, "feature names do not match column count");
  }
  ds.values = std::move(values);
  ds.features = std::move(features);
  return ds;
}

bool Dataset::has_missing() const {
  return std::any_of(missing.begin(), missing.end(), [](std::uint8_t m) { return m != 0; });
}

std::size_t Dataset::missing_count() const {
  return static_cast<std::size_t>(std::count_if(missing.begin(), missing.end(),
                                                [](std::uint8_t m) { return m != 0; }));
}

std::vector<std::size_t> Dataset::row_missing_counts() const {
  std::vector<std::size_t> counts(rows(), 0);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) counts[i] += is_missing(i, j) ? 1 : 0;
  return counts;
}

Matrix covariance(const Dataset& x) {
  if (x.has_missing()) {
    throw Error(ErrorCode::MissingData, "covariance: dataset has missing entries; impute first");
  }
  return covariance(x.values);
}

Matrix covariance(const Matrix& x) {
  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), 0);
  return covariance(x, all);
}

Matrix covariance(const Matrix& x, std::span<const std::size_t> rows) {
  const std::size_t m = rows.size();
  const std::size_t d = x.cols();
  if (m == 0) throw Error(ErrorCode::TooFewRows, "covariance: no rows");
  std::vector<double> mean(d, 0.0);
  for (std::size_t r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(r, j);
  for (double& v : mean) v /= static_cast<double>(m);

  Matrix centered(m, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) centered(i, j) = x(rows[i], j) - mean[j];
  Matrix s = matmul_tn(centered, centered);
  s *= 1.0 / static_cast<double>(m);
  return symmetrize(s);
}

void check_feature_variance(const Matrix& s) {
  double largest = 0.0;
  for (std::size_t j = 0; j < s.rows(); ++j) largest = std::max(largest, s(j, j));
  for (std::size_t j = 0; j < s.rows(); ++j) {
    if (!(s(j, j) > 1e-12 * largest) || largest == 0.0) {
      throw Error(ErrorCode::DegenerateData,
                  "feature " + std::to_string(j) + " has zero variance", j);
    }
  }
}

Dataset mean_impute(const Dataset& x) {
  Dataset out = x;
  out.missing.clear();
  if (!x.has_missing()) return out;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double total = 0.0;
    std::size_t observed = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (x.is_missing(i, j)) continue;
      total += x.values(i, j);
      ++observed;
    }
    if (observed == 0) {
      throw Error(ErrorCode::EmptyColumn, "feature " + std::to_string(j) + " has no observed values", j);
    }
    const double mean = total / static_cast<double>(observed);
    for (std::size_t i = 0; i < x.rows(); ++i)
      if (x.is_missing(i, j)) out.values(i, j) = mean;
  }
  return out;
}

Dataset inject_dropout(const Dataset& x, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout fraction must lie in [0, 1)");
  }
  Dataset out = x;
  const std::size_t total = x.rows() * x.cols();
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  if (count == 0) return out;
  if (out.missing.empty()) out.missing.assign(total, 0);

  std::vector<std::size_t> cells(total);
  std::iota(cells.begin(), cells.end(), 0);
  Rng rng(derive_seed(seed, Stream::Dropout));
  // Partial Fisher-Yates: the first `count` cells form a uniform subset.
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, total - 1);
    std::swap(cells[k], cells[pick(rng)]);
  }
  for (std::size_t k = 0; k < count; ++k) {
    out.missing[cells[k]] = 1;
    out.values[cells[k]] = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

Dataset select_rows(const Dataset& x, std::span<const std::size_t> rows) {
  Dataset out;
  out.features = x.features;
  out.values = Matrix(rows.size(), x.cols());
  const bool masked = !x.missing.empty();
  if (masked) out.missing.assign(rows.size() * x.cols(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out.values(i, j) = x.values(rows[i], j);
      if (masked) out.missing[i * x.cols() + j] = x.missing[rows[i] * x.cols() + j];
    }
  return out;
}

}  // namespace uglad
