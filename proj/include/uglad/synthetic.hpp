#pragma once

#include <cstddef>
#include <cstdint>

#include "uglad/dataset.hpp"
#include "uglad/matrix.hpp"

namespace uglad {

struct GroundTruth {
  Matrix precision;
  Matrix adjacency;  // 0/1, symmetric, zero diagonal
};

/// Sparse SPD precision matrix: off-diagonal entries U(-1, 1) on an
/// Erdos-Renyi(p) support, shifted by a multiple of the identity so that the
/// smallest eigenvalue is exactly 1.
GroundTruth generate_precision(std::size_t d, double p, std::uint64_t seed);

/// M i.i.d. draws from N(0, precision^-1).
Dataset sample_mvn(const GroundTruth& truth, std::size_t m, std::uint64_t seed);

/// Off-diagonal support of a matrix (|a_ij| > tol).
Matrix support(const Matrix& a, double tol = 0.0);

}  // namespace uglad
