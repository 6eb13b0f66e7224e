#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uglad/errors.hpp"
#include "uglad/fit.hpp"
#include "uglad/random.hpp"

namespace uglad {

const char* to_string(FitMode mode) {
  switch (mode) {
    case FitMode::Direct: return "direct";
    case FitMode::Cv: return "cv";
    case FitMode::Multitask: return "multitask";
    case FitMode::Missing: return "missing";
  }
  return "unknown";
}

FitMode parse_fit_mode(const std::string& name) {
  if (name == "direct") return FitMode::Direct;
  if (name == "cv") return FitMode::Cv;
  if (name == "multitask") return FitMode::Multitask;
  if (name == "missing") return FitMode::Missing;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + name + "'");
}

void FitConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  }
  if (!allow_learning_rate_override &&
      (learning_rate < kMinLearningRate || learning_rate > kMaxLearningRate)) {
    throw Error(ErrorCode::InvalidArgument,
                "learning rate outside [0.001, 0.005]; set the override to use it anyway");
  }
  if (!(cv_holdout > 0.0 && cv_holdout < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "cv holdout fraction must lie in (0, 1)");
  }
  if (unroll.depth < 1) throw Error(ErrorCode::InvalidArgument, "unroll depth must be >= 1");
  if (early_stop_window < 0) throw Error(ErrorCode::InvalidArgument, "early-stop window must be >= 0");
}

namespace {

// Each term k pairs the covariance fed to the network with the covariance the
// output is scored against.
struct Problem {
  std::vector<Matrix> inputs;
  std::vector<Matrix> targets;  // empty: score against the input itself
  std::optional<std::vector<Matrix>> validation;  // scored per epoch, not trained on
};

struct EpochOutput {
  double loss = 0.0;
  std::vector<Matrix> thetas;
  std::vector<double> gradient;
};

EpochOutput run_epoch(const Problem& problem, const GladParams& params, const UnrollConfig& unroll) {
  ad::Tape tape;
  const GladNetwork net(tape, params);
  std::vector<ad::Var> terms;
  EpochOutput out;
  for (std::size_t k = 0; k < problem.inputs.size(); ++k) {
    const ad::Var s = tape.constant(problem.inputs[k]);
    const RecordedState state = record_glad_forward(net, s, unroll);
    const ad::Var target = problem.targets.empty() ? s : tape.constant(problem.targets[k]);
    terms.push_back(record_uglad_loss(target, state.theta));
    out.thetas.push_back(state.theta.value());
  }
  const ad::Var loss = record_mean(terms);
  tape.backward(loss);
  out.loss = loss.value().item();
  out.gradient = net.gradient();
  return out;
}

bool plateaued(const std::vector<double>& best_so_far, const FitConfig& cfg) {
  const auto window = static_cast<std::size_t>(cfg.early_stop_window);
  if (window == 0 || best_so_far.size() <= window) return false;
  const double then = best_so_far[best_so_far.size() - 1 - window];
  return then - best_so_far.back() < cfg.early_stop_tol;
}

FitResult train(const Problem& problem, const FitConfig& cfg) {
  cfg.validate();
  FitResult result;
  result.config = cfg;
  GladParams params = GladParams::initialize(derive_seed(cfg.seed, Stream::Parameters));
  std::vector<double> flat = params.flatten();
  AdamState adam;
  std::vector<double> best_so_far;
  double best_valid = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochOutput out = run_epoch(problem, params, cfg.unroll);
    if (!std::isfinite(out.loss)) {
      throw Error(ErrorCode::NoConvergence, "training loss became non-finite at epoch " +
                                                std::to_string(epoch));
    }
    result.loss_history.push_back(out.loss);
    best_so_far.push_back(best_so_far.empty() ? out.loss : std::min(best_so_far.back(), out.loss));

    if (problem.validation) {
      const double v = multitask_loss(*problem.validation, out.thetas);
      result.validation_history.push_back(v);
      if (v < best_valid) {
        best_valid = v;
        result.best_epoch = epoch;
        result.precisions = out.thetas;
        result.params = params;
      }
    } else {
      result.precisions = std::move(out.thetas);
      result.params = params;
    }

    if (epoch == cfg.epochs || plateaued(best_so_far, cfg)) break;
    adam_step(flat, out.gradient, adam, cfg.learning_rate);
    flat.back() = std::max(flat.back(), kMinThetaOffset);
    params.assign(flat);
  }
  return result;
}

Matrix checked_covariance(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix s = covariance(x, rows);
  check_feature_variance(s);
  return s;
}

std::vector<std::size_t> all_rows(std::size_t m) {
  std::vector<std::size_t> rows(m);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

// Seeded shuffle split; validation receives round(holdout * M) rows, at least
// two on each side.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> shuffle_split(std::size_t m, double holdout,
                                                                            std::uint64_t seed) {
  if (m < 4) throw Error(ErrorCode::TooFewRows, "need at least 4 rows to split, got " + std::to_string(m));
  std::vector<std::size_t> rows = all_rows(m);
  Rng rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  auto n_valid = static_cast<std::size_t>(std::llround(holdout * static_cast<double>(m)));
  n_valid = std::clamp<std::size_t>(n_valid, 2, m - 2);
  std::vector<std::size_t> valid(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_valid));
  std::vector<std::size_t> train(rows.begin() + static_cast<std::ptrdiff_t>(n_valid), rows.end());
  std::sort(valid.begin(), valid.end());
  std::sort(train.begin(), train.end());
  return {train, valid};
}

void require_complete(const Dataset& x, const char* what) {
  if (x.has_missing()) {
    throw Error(ErrorCode::MissingData, std::string(what) + ": data has missing entries; use missing mode");
  }
  if (x.rows() < 2) throw Error(ErrorCode::TooFewRows, std::string(what) + ": need at least 2 rows");
}

}  // namespace

FitResult fit_direct(const Dataset& x, const FitConfig& cfg) {
  require_complete(x, "direct fit");
  Problem p;
  p.inputs.push_back(checked_covariance(x.values, all_rows(x.rows())));
  FitResult r = train(p, cfg);
  r.config.mode = FitMode::Direct;
  return r;
}

FitResult fit_cv(const Dataset& x, const FitConfig& cfg) {
  require_complete(x, "cv fit");
  cfg.validate();
  const auto [train_rows, valid_rows] =
      shuffle_split(x.rows(), cfg.cv_holdout, derive_seed(cfg.seed, Stream::CvSplit));
  return fit_cv(select_rows(x, train_rows), select_rows(x, valid_rows), cfg);
}

FitResult fit_cv(const Dataset& train_set, const Dataset& valid_set, const FitConfig& cfg) {
  require_complete(train_set, "cv fit");
  require_complete(valid_set, "cv fit");
  if (train_set.cols() != valid_set.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "cv fit: train and validation feature counts differ");
  }
  Problem p;
  p.inputs.push_back(checked_covariance(train_set.values, all_rows(train_set.rows())));
  p.validation = std::vector<Matrix>{covariance(valid_set.values)};
  FitResult r = train(p, cfg);
  r.config.mode = FitMode::Cv;
  return r;
}

FitResult fit_multitask(std::span<const Dataset> tasks, const FitConfig& cfg) {
  if (tasks.empty()) throw Error(ErrorCode::LengthMismatch, "multitask fit: no tasks");
  cfg.validate();
  const std::size_t d = tasks.front().cols();
  Problem p;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const Dataset& x = tasks[k];
    if (x.cols() != d) {
      throw Error(ErrorCode::DimensionMismatch, "multitask fit: task " + std::to_string(k) + " has " +
                                                    std::to_string(x.cols()) + " features, expected " +
                                                    std::to_string(d));
    }
    require_complete(x, "multitask fit");
    if (cfg.multitask_split) {
      const auto [train_rows, valid_rows] =
          shuffle_split(x.rows(), cfg.cv_holdout, derive_seed(cfg.seed, Stream::TaskSplit, k));
      p.inputs.push_back(checked_covariance(x.values, train_rows));
      p.targets.push_back(covariance(x.values, valid_rows));
    } else {
      p.inputs.push_back(checked_covariance(x.values, all_rows(x.rows())));
    }
  }
  FitResult r = train(p, cfg);
  r.config.mode = FitMode::Multitask;
  return r;
}

FitResult fit_missing(const Dataset& x, const FitConfig& cfg) {
  cfg.validate();
  const Dataset imputed = mean_impute(x);
  const std::vector<std::size_t> fold = stratified_folds(x.row_missing_counts(), cfg.folds, cfg.seed);
  Problem p;
  const Matrix s_full = checked_covariance(imputed.values, all_rows(imputed.rows()));
  for (std::size_t k = 0; k < cfg.folds; ++k) {
    std::vector<std::size_t> batch;
    for (std::size_t i = 0; i < fold.size(); ++i)
      if (fold[i] != k) batch.push_back(i);
    p.inputs.push_back(checked_covariance(imputed.values, batch));
    p.targets.push_back(s_full);
  }
  FitResult r = train(p, cfg);
  r.config.mode = FitMode::Missing;
  r.precisions = {consensus_combine(r.precisions)};
  r.consensus = true;
  return r;
}

FitResult fit(const Dataset& x, const FitConfig& cfg) {
  switch (cfg.mode) {
    case FitMode::Direct: return fit_direct(x, cfg);
    case FitMode::Cv: return fit_cv(x, cfg);
    case FitMode::Multitask: return fit_multitask(std::span<const Dataset>(&x, 1), cfg);
    case FitMode::Missing: return fit_missing(x, cfg);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown fit mode");
}

}  // namespace uglad
