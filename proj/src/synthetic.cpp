#include "uglad/synthetic.hpp"

#include <cmath>

#include "uglad/errors.hpp"
#include "uglad/linalg.hpp"
#include "uglad/random.hpp"

namespace uglad {

GroundTruth generate_precision(std::size_t d, double p, std::uint64_t seed) {
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "generate_precision: d must be >= 2");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "generate_precision: p outside [0, 1]");

  Rng rng(derive_seed(seed, Stream::Graph));
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  Matrix theta(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      // Both draws are taken for every pair so the stream layout does not
      // depend on p.
      const double w = weight(rng);
      const bool edge = coin(rng) < p;
      if (edge) {
        theta(i, j) = w;
        theta(j, i) = w;
      }
    }

  const double smallest = sym_eig(theta).values.front();
  for (std::size_t i = 0; i < d; ++i) theta(i, i) += 1.0 - smallest;

  return GroundTruth{theta, support(theta)};
}

Dataset sample_mvn(const GroundTruth& truth, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "sample_mvn: need at least one sample");
  const std::size_t d = truth.precision.rows();
  const Matrix lower = cholesky(spd_inverse(truth.precision));

  Rng rng(derive_seed(seed, Stream::Samples));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(m, d);
  for (double& v : g.values()) v = normal(rng);
  return Dataset::from_matrix(matmul_nt(g, lower));
}

Matrix support(const Matrix& a, double tol) {
  Matrix adj(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j && std::abs(a(i, j)) > tol) adj(i, j) = 1.0;
  return adj;
}

}  // namespace uglad
