#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "uglad/errors.hpp"
#include "uglad/fit.hpp"
#include "uglad/linalg.hpp"
#include "uglad/metrics.hpp"
#include "uglad/synthetic.hpp"

using namespace uglad;

namespace {

Dataset gaussian_data(std::size_t m, std::size_t d, std::uint64_t seed) {
  oracle::Rng rng(seed);
  return Dataset::from_matrix(oracle::random_gaussian(m, d, rng));
}

FitConfig short_config(FitMode mode, int epochs, std::uint64_t seed = 0) {
  FitConfig cfg;
  cfg.mode = mode;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g{0.0, 0.0};
  AdamState st;
  adam_step(p, g, st, 0.01);
  CHECK(p == std::vector<double>{1.0, -2.0});
  CHECK(st.step == 1);
}

TEST_CASE("adam: first step has magnitude lr against the gradient") {
  for (double g : {3.0, -0.02, 1e-4}) {
    std::vector<double> p{0.5};
    const std::vector<double> grad{g};
    AdamState st;
    adam_step(p, grad, st, 0.01);
    const double expected = 0.01 * std::abs(g) / (std::abs(g) + 1e-8);
    CHECK(std::abs(0.5 - p[0]) == doctest::Approx(expected).epsilon(1e-12));
    CHECK((p[0] < 0.5) == (g > 0));
  }
}

TEST_CASE("adam: minimizes a quadratic bowl") {
  std::vector<double> p{1.0, -0.5, 0.8};
  const double start = std::sqrt(std::inner_product(p.begin(), p.end(), p.begin(), 0.0));
  AdamState st;
  double prev = start;
  bool monotone = true;
  for (int step = 0; step < 200; ++step) {
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) g[i] = 2 * p[i];
    adam_step(p, g, st, 0.01);
    const double norm = std::sqrt(std::inner_product(p.begin(), p.end(), p.begin(), 0.0));
    if (step >= 5 && prev > 0.3 * start && norm >= prev) monotone = false;
    prev = norm;
  }
  CHECK(monotone);
  CHECK(prev < 0.1 * start);
}

TEST_CASE("adam: shape mismatch") {
  std::vector<double> p{1.0, 2.0};
  const std::vector<double> g{1.0};
  AdamState st;
  CHECK_THROWS_AS(adam_step(p, g, st, 0.01), Error);
  const std::vector<double> g2{1.0, 1.0};
  adam_step(p, g2, st, 0.01);
  std::vector<double> p3{1.0, 2.0, 3.0};
  const std::vector<double> g3{1.0, 1.0, 1.0};
  CHECK_THROWS_AS(adam_step(p3, g3, st, 0.01), Error);
}

TEST_CASE("consensus examples") {
  auto one = [](std::vector<double> vals) {
    std::vector<Matrix> ms;
    for (double v : vals) ms.push_back(Matrix{{v}});
    return consensus_combine(ms).item();
  };
  CHECK(one({0.5, -0.2, 0.4}) == 0.2);
  CHECK(one({0.7, 0.7, 0.7}) == 0.7);
  CHECK(one({0.5, -0.5}) == 0.0);
  CHECK(one({0.0, 0.0, -0.3}) == -0.0);
  CHECK(one({1e-9, -0.4}) == doctest::Approx(-1e-9));
  CHECK_THROWS_AS(consensus_combine(std::vector<Matrix>{}), Error);
  CHECK_THROWS_AS(consensus_combine(std::vector<Matrix>{Matrix(2, 2), Matrix(3, 3)}), Error);
}

TEST_CASE("consensus keeps symmetry and the magnitude bound") {
  oracle::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Matrix> ms;
    for (int k = 0; k < 1 + trial % 5; ++k) {
      const Matrix s = oracle::random_symmetric(4, rng);
      ms.push_back(s);
    }
    const Matrix c = consensus_combine(ms);
    CHECK(is_symmetric(c, 0.0));
    for (std::size_t e = 0; e < c.size(); ++e) {
      double lo = INFINITY;
      for (const Matrix& m : ms) lo = std::min(lo, std::abs(m[e]));
      CHECK(std::abs(c[e]) <= lo);
    }
  }
}

TEST_CASE("stratified folds") {
  const std::vector<std::size_t> none(9, 0);
  std::vector<std::size_t> fold = stratified_folds(none, 3, 1);
  for (std::size_t f = 0; f < 3; ++f) CHECK(std::count(fold.begin(), fold.end(), f) == 3);

  std::vector<std::size_t> three(9, 0);
  three[1] = three[4] = three[8] = 2;
  fold = stratified_folds(three, 3, 5);
  std::vector<int> per_fold(3, 0);
  for (std::size_t i : {1, 4, 8}) ++per_fold[fold[i]];
  CHECK(per_fold == std::vector<int>{1, 1, 1});

  oracle::Rng rng(6);
  std::uniform_int_distribution<std::size_t> u(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> counts(17 + trial);
    for (auto& c : counts) c = u(rng) == 0 ? u(rng) : 0;
    const std::vector<std::size_t> fd = stratified_folds(counts, 4, trial);
    std::vector<std::size_t> rows_with(4, 0), sizes(4, 0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      ++sizes[fd[i]];
      if (counts[i] > 0) ++rows_with[fd[i]];
    }
    CHECK(*std::max_element(rows_with.begin(), rows_with.end()) - *std::min_element(rows_with.begin(), rows_with.end()) <= 1);
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
  }
  CHECK_THROWS_AS(stratified_folds(std::vector<std::size_t>(2, 0), 3, 0), Error);
  CHECK_THROWS_AS(stratified_folds(none, 1, 0), Error);
}

TEST_CASE("config validation") {
  FitConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.learning_rate = 0.01;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.allow_learning_rate_override = true;
  CHECK_NOTHROW(cfg.validate());
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.epochs = 1;
  cfg.cv_holdout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK(parse_fit_mode("missing") == FitMode::Missing);
  CHECK_THROWS_AS(parse_fit_mode("batch"), Error);
}

TEST_CASE("fit_direct approaches the unpenalized optimum on abundant data") {
  const Dataset x = gaussian_data(2000, 5, 1);
  const FitResult r = fit_direct(x, short_config(FitMode::Direct, 100));
  const Matrix s = covariance(x);
  const double bound = oracle::log_abs_det(s) + 5.0;
  CHECK(r.loss_history.size() <= 100);
  CHECK(r.loss_history.back() >= bound - 1e-9);
  CHECK(r.loss_history.back() <= bound + 0.05 * std::abs(bound));
  CHECK(is_positive_definite(r.precision()));
  CHECK(r.config.mode == FitMode::Direct);
  CHECK_FALSE(r.best_epoch.has_value());
}

TEST_CASE("fit_direct is deterministic") {
  const Dataset x = gaussian_data(40, 6, 2);
  const FitResult a = fit_direct(x, short_config(FitMode::Direct, 30, 9));
  const FitResult b = fit_direct(x, short_config(FitMode::Direct, 30, 9));
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.precision() == b.precision());
  CHECK(a.params.flatten() == b.params.flatten());
}

TEST_CASE("fit_direct is equivariant to column permutations") {
  const Dataset x = gaussian_data(60, 7, 3);
  std::vector<std::size_t> perm{3, 0, 6, 1, 5, 2, 4};
  Matrix permuted(60, 7);
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = 0; j < 7; ++j) permuted(i, perm[j]) = x.values(i, j);
  const FitConfig cfg = short_config(FitMode::Direct, 50);
  const Matrix a = permute_symmetric(fit_direct(x, cfg).precision(), perm);
  const Matrix b = fit_direct(Dataset::from_matrix(permuted), cfg).precision();
  CHECK(max_abs_diff(a, b) < 1e-6);
}

TEST_CASE("fit_direct rejects degenerate and missing data") {
  Dataset x = gaussian_data(30, 4, 4);
  for (std::size_t i = 0; i < 30; ++i) x.values(i, 2) = 1.5;
  try {
    fit_direct(x, short_config(FitMode::Direct, 2));
    FAIL("expected DegenerateData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateData);
    CHECK(e.feature() == std::optional<std::size_t>(2));
  }
  const Dataset holes = inject_dropout(gaussian_data(30, 4, 5), 0.1, 1);
  CHECK_THROWS_AS(fit_direct(holes, short_config(FitMode::Direct, 2)), Error);
}

TEST_CASE("fit_cv selects the epoch with the lowest validation loss") {
  const GroundTruth truth = generate_precision(10, 0.2, 5);
  const Dataset x = sample_mvn(truth, 30, 6);
  const FitResult r = fit_cv(x, short_config(FitMode::Cv, 60));
  REQUIRE(r.best_epoch.has_value());
  REQUIRE(r.validation_history.size() == r.loss_history.size());
  const auto best = std::min_element(r.validation_history.begin(), r.validation_history.end());
  CHECK(*r.best_epoch == 1 + (best - r.validation_history.begin()));
  for (double v : r.validation_history) CHECK(r.validation_history[*r.best_epoch - 1] <= v);
  CHECK(is_positive_definite(r.precision()));
  CHECK_THROWS_AS(fit_cv(gaussian_data(3, 2, 1), short_config(FitMode::Cv, 2)), Error);
}

TEST_CASE("fit_cv with identical train and validation sets tracks fit_direct") {
  const Dataset x = gaussian_data(50, 6, 7);
  const FitResult cv = fit_cv(x, x, short_config(FitMode::Cv, 40));
  const FitResult direct = fit_direct(x, short_config(FitMode::Direct, 40));
  CHECK(cv.loss_history == direct.loss_history);
  CHECK(cv.validation_history == cv.loss_history);
  REQUIRE(cv.best_epoch.has_value());
  CHECK((cv.precision() == direct.precision() || *cv.best_epoch < 40));
}

TEST_CASE("multitask with one task reproduces the direct fit") {
  const Dataset x = gaussian_data(40, 6, 8);
  const std::vector<Dataset> tasks{x};
  const FitResult mt = fit_multitask(tasks, short_config(FitMode::Multitask, 25, 4));
  const FitResult direct = fit_direct(x, short_config(FitMode::Direct, 25, 4));
  CHECK(mt.loss_history == direct.loss_history);
  REQUIRE(mt.precisions.size() == 1);
  CHECK(mt.precisions[0] == direct.precision());
}

TEST_CASE("multitask with identical tasks returns identical precisions") {
  const Dataset x = gaussian_data(40, 6, 9);
  const std::vector<Dataset> tasks{x, x, x};
  const FitResult r = fit_multitask(tasks, short_config(FitMode::Multitask, 20));
  REQUIRE(r.precisions.size() == 3);
  CHECK(r.precisions[0] == r.precisions[1]);
  CHECK(r.precisions[1] == r.precisions[2]);

  FitConfig split = short_config(FitMode::Multitask, 10);
  split.multitask_split = true;
  const std::vector<Dataset> two{gaussian_data(30, 5, 1), gaussian_data(30, 5, 2)};
  CHECK(fit_multitask(two, split).precisions.size() == 2);

  const std::vector<Dataset> mixed{gaussian_data(30, 5, 1), gaussian_data(30, 6, 2)};
  CHECK_THROWS_AS(fit_multitask(mixed, short_config(FitMode::Multitask, 2)), Error);
  CHECK_THROWS_AS(fit_multitask(std::vector<Dataset>{}, short_config(FitMode::Multitask, 2)), Error);
}

TEST_CASE("missing mode produces a consensus estimate") {
  const GroundTruth truth = generate_precision(8, 0.3, 10);
  const Dataset x = inject_dropout(sample_mvn(truth, 90, 11), 0.2, 12);
  FitConfig cfg = short_config(FitMode::Missing, 20);
  cfg.folds = 3;
  const FitResult r = fit_missing(x, cfg);
  CHECK(r.consensus);
  REQUIRE(r.precisions.size() == 1);
  CHECK(r.precision().rows() == 8);
  CHECK(is_symmetric(r.precision(), 0.0));
  for (std::size_t i = 0; i < 8; ++i) CHECK(r.precision()(i, i) > 0);

  Dataset empty = x;
  for (std::size_t i = 0; i < empty.rows(); ++i) {
    empty.values(i, 5) = NAN;
    empty.missing[i * 8 + 5] = 1;
  }
  try {
    fit_missing(empty, cfg);
    FAIL("expected EmptyColumn");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyColumn);
  }
}

TEST_CASE("missing mode on complete data stays close to the direct fit") {
  double diff = 0.0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    const GroundTruth truth = generate_precision(12, 0.2, 100 + seed);
    const Dataset x = sample_mvn(truth, 120, 200 + seed);
    FitConfig cfg = short_config(FitMode::Missing, 100, seed);
    const double missing_auc = aupr_auc(fit_missing(x, cfg).precision(), truth).auc;
    cfg.mode = FitMode::Direct;
    const double direct_auc = aupr_auc(fit_direct(x, cfg).precision(), truth).auc;
    diff += (missing_auc - direct_auc) / seeds;
  }
  CHECK(std::abs(diff) < 0.05);
}

TEST_CASE("training improves the loss and keeps the offset positive") {
  int improved = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const GroundTruth truth = generate_precision(10, 0.15, seed);
    const FitResult r = fit_direct(sample_mvn(truth, 25, 50 + seed), short_config(FitMode::Direct, 40, seed));
    for (double v : r.loss_history) CHECK(std::isfinite(v));
    if (r.loss_history.back() < r.loss_history.front()) ++improved;
    CHECK(r.params.theta_offset >= kMinThetaOffset);
  }
  CHECK(improved >= 9);
}

TEST_CASE("early stopping ends a plateaued run") {
  const Dataset x = gaussian_data(40, 5, 12);
  FitConfig cfg = short_config(FitMode::Direct, 200);
  cfg.early_stop_window = 3;
  cfg.early_stop_tol = 1e6;  // any progress counts as a plateau
  CHECK(fit_direct(x, cfg).loss_history.size() == 4);
  cfg.early_stop_window = 0;
  cfg.epochs = 12;
  CHECK(fit_direct(x, cfg).loss_history.size() == 12);
}
