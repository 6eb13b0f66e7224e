#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "uglad/dataset.hpp"
#include "uglad/matrix.hpp"

namespace uglad {

inline constexpr int kPenaltyAdaptEvery = 10;
inline constexpr double kPenaltyBalance = 10.0;

struct GlassoOptions {
  /// Initial ADMM penalty.
  double admm_penalty = 1.0;
  /// Doubles or halves the penalty every few iterations when one residual
  /// exceeds the other tenfold.
  bool adapt_penalty = true;
  int max_iter = 1000;
  double tol = 1e-6;
};

struct GlassoResult {
  Matrix precision;  // the sparse split variable at convergence
  int iterations = 0;
  double kkt_residual = 0.0;
  std::vector<double> objective_trace;  // objective at the Theta iterate, per iteration
};

/// -log det Theta + tr(S Theta) + rho * sum_{i != j} |Theta_ij|
double glasso_objective(const Matrix& s, const Matrix& theta, double rho);

/// Largest entrywise distance of S - Theta^-1 from -rho * subdiff ||Theta||_{1,off}.
double glasso_kkt_residual(const Matrix& s, const Matrix& theta, double rho);

/// ADMM for the l1-penalized Gaussian likelihood (diagonal unpenalized).
/// Throws NoConvergence when the KKT residual is still above tol after
/// max_iter iterations.
Matrix admm_glasso(const Matrix& s, double rho, const GlassoOptions& opts = {});

/// As admm_glasso, with optional warm start (Z, U) and diagnostics.
GlassoResult admm_glasso_detailed(const Matrix& s, double rho, const GlassoOptions& opts,
                                  const Matrix* warm_z = nullptr, const Matrix* warm_u = nullptr,
                                  Matrix* final_u = nullptr);

/// n log-spaced penalties from max_{i != j} |S_ij| down to 1% of it.
std::vector<double> default_rho_grid(const Matrix& s, std::size_t n = 8);

struct BaselineCvResult {
  Matrix precision;
  double rho = 0.0;
  std::vector<double> mean_scores;  // held-out -log-likelihood per grid point
};

/// K-fold selection of rho by held-out Gaussian likelihood, refit on all rows.
BaselineCvResult baseline_cv_detailed(const Dataset& x, std::span<const double> rho_grid,
                                      std::size_t folds, std::uint64_t seed,
                                      const GlassoOptions& opts = {});
Matrix baseline_cv(const Dataset& x, std::span<const double> rho_grid, std::size_t folds,
                   std::uint64_t seed, const GlassoOptions& opts = {});

}  // namespace uglad
