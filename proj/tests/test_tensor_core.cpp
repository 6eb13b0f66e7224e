#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "uglad/errors.hpp"
#include "uglad/linalg.hpp"
#include "uglad/matrix.hpp"

using namespace uglad;

namespace {

void check_close(const Matrix& a, const Matrix& b, double tol) {
  REQUIRE(a.same_shape(b));
  CHECK(max_abs_diff(a, b) <= tol);
}

}  // namespace

TEST_CASE("matrix products agree with the naive oracle") {
  oracle::Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + trial % 7, k = 2 + trial % 5, n = 1 + trial % 4;
    const Matrix a = oracle::random_gaussian(m, k, rng);
    const Matrix b = oracle::random_gaussian(k, n, rng);
    const Matrix bt = oracle::random_gaussian(n, k, rng);
    const Matrix at = oracle::random_gaussian(k, m, rng);
    check_close(matmul(a, b), oracle::naive_matmul(a, b), 1e-12);
    check_close(matmul_nt(a, bt), oracle::naive_matmul(a, oracle::naive_transpose(bt)), 1e-12);
    check_close(matmul_tn(at, b), oracle::naive_matmul(oracle::naive_transpose(at), b), 1e-12);
  }
  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), Error);
}

TEST_CASE("elementwise helpers") {
  const Matrix a{{1, -2}, {3, 4}};
  const Matrix b{{2, 0}, {-1, 1}};
  CHECK(inner(a, b) == doctest::Approx(2 - 3 + 4));
  CHECK(trace(a) == 5);
  CHECK(sum(a) == 6);
  CHECK(max_abs(a) == 4);
  CHECK(frobenius_norm(a) == doctest::Approx(std::sqrt(30.0)));
  CHECK(hadamard(a, b) == Matrix{{2, 0}, {-3, 4}});
  CHECK(symmetrize(a) == Matrix{{1, 0.5}, {0.5, 4}});
  CHECK_FALSE(is_symmetric(a));
  CHECK(is_symmetric(symmetrize(a)));
  const std::vector<std::size_t> perm{1, 0};
  CHECK(permute_symmetric(Matrix{{1, 2}, {2, 3}}, perm) == Matrix{{3, 2}, {2, 1}});
}

TEST_CASE("cholesky examples") {
  CHECK(cholesky(Matrix::identity(3)) == Matrix::identity(3));
  check_close(cholesky(Matrix{{4, 2}, {2, 5}}), Matrix{{2, 0}, {1, 2}}, 1e-15);
  CHECK_THROWS_AS(cholesky(Matrix{{1, 2}, {2, 1}}), Error);
  try {
    cholesky(Matrix{{-1}});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
}

TEST_CASE("cholesky reconstructs random SPD matrices") {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = oracle::random_spd(8, 0.1, 100.0, rng);
    const Matrix l = cholesky(a);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(l(i, i) > 0);
      for (std::size_t j = i + 1; j < 8; ++j) CHECK(l(i, j) == 0);
    }
    CHECK(oracle::frob_diff(oracle::naive_matmul(l, oracle::naive_transpose(l)), a) < 1e-10 * oracle::frob(a));
  }
}

TEST_CASE("log_det_spd") {
  CHECK(log_det_spd(Matrix::identity(4)) == 0.0);
  const std::vector<double> diag{2, 3};
  CHECK(log_det_spd(Matrix::diagonal(diag)) == doctest::Approx(std::log(6.0)).epsilon(1e-14));
  oracle::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w;
    const Matrix a = oracle::random_spd(6, 0.05, 20.0, rng, &w);
    double expected = 0;
    for (double v : w) expected += std::log(v);
    CHECK(std::abs(log_det_spd(a) - expected) < 1e-9);
    CHECK(std::abs(log_det_spd(a) - oracle::log_abs_det(a)) < 1e-9);
    const SymEig e = sym_eig(a);
    double from_eig = 0;
    for (double v : e.values) from_eig += std::log(v);
    CHECK(std::abs(log_det_spd(a) - from_eig) < 1e-9);
  }
}

TEST_CASE("spd_inverse") {
  const std::vector<double> d{2, 4};
  check_close(spd_inverse(Matrix::diagonal(d)), Matrix{{0.5, 0}, {0, 0.25}}, 1e-15);
  CHECK(spd_inverse(Matrix::identity(5)) == Matrix::identity(5));
  oracle::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = oracle::random_spd(10, 0.1, 50.0, rng);
    const Matrix inv = spd_inverse(a);
    CHECK(is_symmetric(inv, 0.0));
    CHECK(oracle::frob_diff(oracle::naive_matmul(a, inv), Matrix::identity(10)) <= 1e-9 * 10);
    CHECK(max_abs_diff(inv, oracle::gauss_jordan_inverse(a)) < 1e-10 * max_abs(inv));
    CHECK(max_abs_diff(spd_inverse(inv), a) < 1e-8);
  }
}

TEST_CASE("sym_eig examples") {
  const SymEig e = sym_eig(Matrix{{3, 0, 0}, {0, 1, 0}, {0, 0, 2}});
  CHECK(e.values == std::vector<double>{1, 2, 3});
  for (std::size_t k = 0; k < 3; ++k) {
    double norm = 0;
    for (std::size_t i = 0; i < 3; ++i) norm += std::abs(e.vectors(i, k));
    CHECK(norm == doctest::Approx(1.0));
  }
  const SymEig f = sym_eig(Matrix{{0, 1}, {1, 0}});
  CHECK(f.values[0] == doctest::Approx(-1.0));
  CHECK(f.values[1] == doctest::Approx(1.0));
}

TEST_CASE("sym_eig reconstructs random symmetric matrices") {
  oracle::Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = oracle::random_symmetric(12, rng);
    for (const SymEig& e : {sym_eig(a), sym_eig_tridiagonal(a)}) {
      CHECK(std::is_sorted(e.values.begin(), e.values.end()));
      Matrix vw = e.vectors;
      for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t k = 0; k < 12; ++k) vw(i, k) *= e.values[k];
      CHECK(oracle::frob_diff(oracle::naive_matmul(a, e.vectors), vw) < 1e-8 * oracle::frob(a));
      CHECK(oracle::frob_diff(oracle::naive_matmul(oracle::naive_transpose(e.vectors), e.vectors),
                              Matrix::identity(12)) < 1e-8);
    }
  }
}

TEST_CASE("matrix_sqrt_spd examples") {
  check_close(matrix_sqrt_spd(Matrix::identity(4) * 4.0), Matrix::identity(4) * 2.0, 1e-12);
  check_close(matrix_sqrt_spd(Matrix{{5, 4}, {4, 5}}), Matrix{{2, 1}, {1, 2}}, 1e-12);
  const NewtonSchulzResult ns = newton_schulz_sqrt(Matrix{{5, 4}, {4, 5}});
  CHECK(ns.converged);
  CHECK(ns.iterations <= kNewtonSchulzMaxIter);
}

TEST_CASE("matrix_sqrt_spd squares back on random SPD input") {
  oracle::Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = oracle::random_spd(10, 1e-2, 1e2, rng);
    const Matrix b = matrix_sqrt_spd(a);
    CHECK(is_positive_definite(b));
    CHECK(is_symmetric(b, 0.0));
    CHECK(oracle::frob_diff(oracle::naive_matmul(b, b), a) < 1e-7 * oracle::frob(a));
    CHECK(oracle::frob_diff(oracle::naive_matmul(matrix_sqrt_eig(a), matrix_sqrt_eig(a)), a) < 1e-7 * oracle::frob(a));
  }
}

TEST_CASE("Newton-Schulz reports non-convergence and the entry point falls back") {
  // An indefinite input has no SPD root, so the iteration stalls.
  const NewtonSchulzResult stalled = newton_schulz_sqrt(Matrix{{1, 0}, {0, -1}});
  CHECK_FALSE(stalled.converged);
  oracle::Rng rng(7);
  const Matrix a = oracle::random_spd(6, 1e-12, 1.0, rng);
  const Matrix b = matrix_sqrt_spd(a);
  CHECK(oracle::frob_diff(oracle::naive_matmul(b, b), a) < 1e-7 * oracle::frob(a));
}

TEST_CASE("operations are deterministic") {
  oracle::Rng rng(8);
  const Matrix a = oracle::random_spd(9, 0.1, 10.0, rng);
  CHECK(matrix_sqrt_spd(a) == matrix_sqrt_spd(a));
  CHECK(spd_inverse(a) == spd_inverse(a));
  CHECK(sym_eig(a).vectors == sym_eig(a).vectors);
  CHECK(log_det_spd(a) == log_det_spd(a));
}
