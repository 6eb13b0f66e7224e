#pragma once

#include <cstddef>
#include <vector>

#include "uglad/matrix.hpp"

namespace uglad {

/// Lower-triangular L with L * L^T = A. Reads only the lower triangle of A.
/// Throws NotPositiveDefinite when a pivot is not strictly positive.
Matrix cholesky(const Matrix& a);

/// True when the Cholesky factorization of `a` succeeds.
bool is_positive_definite(const Matrix& a);

/// log det A computed as 2 * sum(log L_ii).
double log_det_spd(const Matrix& a);

/// Inverse of an SPD matrix via its Cholesky factor, symmetrized.
Matrix spd_inverse(const Matrix& a);

struct SymEig {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k pairs with values[k]
};

inline constexpr int kJacobiMaxSweeps = 100;

/// Cyclic Jacobi eigensolver for symmetric matrices.
/// Throws NoConvergence when the sweep budget is exhausted.
SymEig sym_eig(const Matrix& a);

/// Householder tridiagonalization + implicit QL. Same contract as sym_eig;
/// used in hot loops (the glasso baseline) where Jacobi is too slow.
SymEig sym_eig_tridiagonal(const Matrix& a);

inline constexpr int kNewtonSchulzMaxIter = 25;
inline constexpr double kNewtonSchulzTol = 1e-9;

struct NewtonSchulzResult {
  Matrix root;
  int iterations = 0;
  bool converged = false;
};

/// Coupled Newton-Schulz iteration for the principal square root, on A scaled
/// by its Frobenius norm. Stops once ||B*B - A||_F / ||A||_F < kNewtonSchulzTol
/// and then applies one more iteration. Never throws on stalls; check
/// `converged`.
NewtonSchulzResult newton_schulz_sqrt(const Matrix& a);

/// Principal square root through the eigendecomposition.
Matrix matrix_sqrt_eig(const Matrix& a);

/// Principal square root of an SPD matrix: Newton-Schulz, falling back to the
/// eigendecomposition route when the iteration cap is hit.
Matrix matrix_sqrt_spd(const Matrix& a);

}  // namespace uglad
