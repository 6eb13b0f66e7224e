#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uglad/errors.hpp"
#include "uglad/fit.hpp"
#include "uglad/random.hpp"

namespace uglad {

Matrix consensus_combine(std::span<const Matrix> thetas) {
  if (thetas.empty()) throw Error(ErrorCode::LengthMismatch, "consensus_combine: no inputs");
  const Matrix& first = thetas.front();
  for (const Matrix& t : thetas) {
    if (!t.same_shape(first)) throw Error(ErrorCode::LengthMismatch, "consensus_combine: dimensions differ");
  }
  Matrix out(first.rows(), first.cols());
  for (std::size_t k = 0; k < first.size(); ++k) {
    int votes = 0;
    double smallest = std::numeric_limits<double>::infinity();
    for (const Matrix& t : thetas) {
      const double v = t[k];
      if (v > kVoteThreshold) ++votes;
      if (v < -kVoteThreshold) --votes;
      smallest = std::min(smallest, std::abs(v));
    }
    out[k] = votes > 0 ? smallest : (votes < 0 ? -smallest : 0.0);
  }
  return out;
}

std::vector<std::size_t> stratified_folds(std::span<const std::size_t> missing_counts,
                                          std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "stratified_folds: need at least 2 folds");
  const std::size_t m = missing_counts.size();
  if (m < folds) {
    throw Error(ErrorCode::TooFewRows, "stratified_folds: " + std::to_string(m) +
                                           " rows cannot fill " + std::to_string(folds) + " folds");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, Stream::Folds));
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return missing_counts[a] > missing_counts[b];
  });
  std::vector<std::size_t> fold(m);
  for (std::size_t pos = 0; pos < m; ++pos) fold[order[pos]] = pos % folds;
  return fold;
}

}  // namespace uglad
