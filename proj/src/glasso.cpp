#include "uglad/glasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uglad/errors.hpp"
#include "uglad/linalg.hpp"
#include "uglad/random.hpp"

namespace uglad {

namespace {

double off_l1(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += std::abs(a(i, j));
  return s;
}

double held_out_score(const Matrix& s_hold, const Matrix& theta) {
  double tr = 0.0;
  for (std::size_t i = 0; i < theta.rows(); ++i)
    for (std::size_t j = 0; j < theta.cols(); ++j) tr += s_hold(i, j) * theta(j, i);
  return tr - log_det_spd(theta);
}

}  // namespace

double glasso_objective(const Matrix& s, const Matrix& theta, double rho) {
  double tr = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j) tr += s(i, j) * theta(j, i);
  return -log_det_spd(theta) + tr + rho * off_l1(theta);
}

double glasso_kkt_residual(const Matrix& s, const Matrix& theta, double rho) {
  const Matrix g = s - spd_inverse(theta);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) {
      double r;
      if (i == j) {
        r = std::abs(g(i, j));
      } else if (theta(i, j) != 0.0) {
        r = std::abs(g(i, j) + rho * (theta(i, j) > 0.0 ? 1.0 : -1.0));
      } else {
        r = std::max(0.0, std::abs(g(i, j)) - rho);
      }
      worst = std::max(worst, r);
    }
  return worst;
}

GlassoResult admm_glasso_detailed(const Matrix& s, double rho, const GlassoOptions& opts,
                                  const Matrix* warm_z, const Matrix* warm_u, Matrix* final_u) {
  if (!s.is_square() || s.rows() == 0) throw Error(ErrorCode::ShapeMismatch, "admm_glasso: S must be square");
  if (!(rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "admm_glasso: rho must be > 0");
  if (!(opts.admm_penalty > 0.0)) throw Error(ErrorCode::InvalidArgument, "admm_glasso: penalty must be > 0");
  const std::size_t d = s.rows();
  double pen = opts.admm_penalty;

  Matrix z = warm_z ? *warm_z : Matrix::identity(d);
  Matrix u = warm_u ? *warm_u : Matrix(d, d);
  Matrix theta(d, d);

  GlassoResult result;
  for (int it = 1; it <= opts.max_iter; ++it) {
    // Theta update: pen * Theta - Theta^-1 = pen (Z - U) - S, solved in the eigenbasis.
    const SymEig eig = sym_eig_tridiagonal((z - u) * pen - s);
    Matrix scaled = eig.vectors;
    for (std::size_t k = 0; k < d; ++k) {
      const double q = eig.values[k];
      const double t = (q + std::sqrt(q * q + 4.0 * pen)) / (2.0 * pen);
      for (std::size_t i = 0; i < d; ++i) scaled(i, k) *= t;
    }
    theta = symmetrize(matmul_nt(scaled, eig.vectors));

    // Z update: off-diagonal soft threshold.
    const Matrix z_prev = z;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double v = theta(i, j) + u(i, j);
        if (i == j) {
          z(i, j) = v;
        } else {
          const double mag = std::abs(v) - rho / pen;
          z(i, j) = mag > 0.0 ? std::copysign(mag, v) : 0.0;
        }
      }
    u += theta - z;

    result.objective_trace.push_back(glasso_objective(s, theta, rho));
    result.iterations = it;

    const double primal = max_abs_diff(theta, z);
    const double dual = pen * max_abs_diff(z, z_prev);
    if (opts.adapt_penalty && it % kPenaltyAdaptEvery == 0) {
      // Residual balancing; U is the scaled dual, so it rescales with the penalty.
      if (primal > kPenaltyBalance * dual) {
        pen *= 2.0;
        u *= 0.5;
      } else if (dual > kPenaltyBalance * primal) {
        pen *= 0.5;
        u *= 2.0;
      }
    }
    if (primal < opts.tol && dual < opts.tol && is_positive_definite(z)) {
      const double kkt = glasso_kkt_residual(s, z, rho);
      result.kkt_residual = kkt;
      if (kkt < opts.tol) {
        result.precision = z;
        if (final_u) *final_u = u * (pen / opts.admm_penalty);  // dual at the initial penalty
        return result;
      }
    }
  }
  throw Error(ErrorCode::NoConvergence,
              "admm_glasso: no convergence after " + std::to_string(opts.max_iter) + " iterations");
}

Matrix admm_glasso(const Matrix& s, double rho, const GlassoOptions& opts) {
  return admm_glasso_detailed(s, rho, opts).precision;
}

std::vector<double> default_rho_grid(const Matrix& s, std::size_t n) {
  double top = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j)
      if (i != j) top = std::max(top, std::abs(s(i, j)));
  if (!(top > 0.0)) top = 1.0;
  std::vector<double> grid;
  if (n == 1) return {top};
  for (std::size_t k = 0; k < n; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(n - 1);
    grid.push_back(top * std::pow(10.0, -2.0 * frac));
  }
  return grid;
}

BaselineCvResult baseline_cv_detailed(const Dataset& x, std::span<const double> rho_grid,
                                      std::size_t folds, std::uint64_t seed,
                                      const GlassoOptions& opts) {
  if (rho_grid.empty()) throw Error(ErrorCode::InvalidArgument, "baseline_cv: empty rho grid");
  if (x.has_missing()) throw Error(ErrorCode::MissingData, "baseline_cv: impute missing entries first");
  const std::size_t m = x.rows();
  if (folds < 2 || m < folds) throw Error(ErrorCode::TooFewRows, "baseline_cv: need at least `folds` rows");

  // Descending penalties so each fit warm-starts from a sparser neighbour.
  std::vector<std::size_t> order(rho_grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rho_grid[a] > rho_grid[b]; });

  std::vector<std::size_t> rows(m);
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(derive_seed(seed, Stream::Baseline));
  std::shuffle(rows.begin(), rows.end(), rng);

  BaselineCvResult result;
  result.mean_scores.assign(rho_grid.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, hold;
    for (std::size_t i = 0; i < m; ++i) (i % folds == f ? hold : train).push_back(rows[i]);
    const Matrix s_train = covariance(x.values, train);
    const Matrix s_hold = covariance(x.values, hold);
    Matrix warm_z, warm_u;
    bool have_warm = false;
    for (std::size_t idx : order) {
      double score = std::numeric_limits<double>::infinity();
      try {
        Matrix u_out;
        const GlassoResult fit = admm_glasso_detailed(s_train, rho_grid[idx], opts,
                                                      have_warm ? &warm_z : nullptr,
                                                      have_warm ? &warm_u : nullptr, &u_out);
        score = held_out_score(s_hold, fit.precision);
        warm_z = fit.precision;
        warm_u = std::move(u_out);
        have_warm = true;
      } catch (const Error& e) {
        // A penalty the solver cannot reach is not a candidate.
        if (e.code() != ErrorCode::NoConvergence && e.code() != ErrorCode::NotPositiveDefinite) throw;
      }
      result.mean_scores[idx] += score / static_cast<double>(folds);
    }
  }

  std::size_t best = order.front();
  for (std::size_t idx : order)
    if (result.mean_scores[idx] < result.mean_scores[best]) best = idx;
  result.rho = rho_grid[best];

  // Refit on all rows, walking the same descending path for warm starts.
  const Matrix s_all = covariance(x);
  Matrix warm_z, warm_u;
  bool have_warm = false;
  for (std::size_t idx : order) {
    if (rho_grid[idx] < result.rho) break;
    const bool last = rho_grid[idx] == result.rho;
    try {
      Matrix u_out;
      GlassoResult fit = admm_glasso_detailed(s_all, rho_grid[idx], opts, have_warm ? &warm_z : nullptr,
                                              have_warm ? &warm_u : nullptr, &u_out);
      warm_z = std::move(fit.precision);
      warm_u = std::move(u_out);
      have_warm = true;
    } catch (const Error& e) {
      if (last || e.code() != ErrorCode::NoConvergence) throw;
    }
    if (last) break;
  }
  result.precision = std::move(warm_z);
  return result;
}

Matrix baseline_cv(const Dataset& x, std::span<const double> rho_grid, std::size_t folds,
                   std::uint64_t seed, const GlassoOptions& opts) {
  return baseline_cv_detailed(x, rho_grid, folds, seed, opts).precision;
}

}  // namespace uglad
