#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uglad/dataset.hpp"
#include "uglad/glad.hpp"
#include "uglad/matrix.hpp"

namespace uglad {

// --- Adam ----------------------------------------------------------------------

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update in place. Accumulators are sized on first use.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate);

// --- consensus -----------------------------------------------------------------

inline constexpr double kVoteThreshold = 1e-8;

/// Entrywise majority sign (entries with |v| <= 1e-8 abstain, ties give 0)
/// times the smallest magnitude across the inputs.
Matrix consensus_combine(std::span<const Matrix> thetas);

// --- folds ---------------------------------------------------------------------

/// Rows sorted by descending missing count (ties shuffled by seed), dealt
/// round-robin into `folds` folds. Returns the fold of each row.
std::vector<std::size_t> stratified_folds(std::span<const std::size_t> missing_counts,
                                          std::size_t folds, std::uint64_t seed);

// --- training ------------------------------------------------------------------

enum class FitMode { Direct, Cv, Multitask, Missing };

const char* to_string(FitMode mode);
FitMode parse_fit_mode(const std::string& name);

inline constexpr double kMinLearningRate = 0.001;
inline constexpr double kMaxLearningRate = 0.005;

struct FitConfig {
  FitMode mode = FitMode::Direct;
  int epochs = 250;
  double learning_rate = 0.002;
  /// Permit learning rates outside [0.001, 0.005].
  bool allow_learning_rate_override = false;
  UnrollConfig unroll;
  double cv_holdout = 0.3;
  std::size_t folds = 3;
  std::uint64_t seed = 0;
  /// Multitask: train on a split of each task and score on its held-out part.
  bool multitask_split = false;
  /// Stop when the best training loss improved by less than this over the
  /// last `early_stop_window` epochs. A window of 0 disables early stopping.
  double early_stop_tol = 1e-6;
  int early_stop_window = 25;

  void validate() const;
};

struct FitResult {
  std::vector<Matrix> precisions;  // one per task; one otherwise
  std::vector<double> loss_history;
  std::vector<double> validation_history;  // cv mode
  std::optional<int> best_epoch;           // 1-based, cv mode
  bool consensus = false;                  // missing mode
  GladParams params;
  FitConfig config;

  const Matrix& precision() const { return precisions.front(); }
};

FitResult fit_direct(const Dataset& x, const FitConfig& cfg);
FitResult fit_cv(const Dataset& x, const FitConfig& cfg);
/// CV with explicit train/validation data (the validation set may equal the
/// training set).
FitResult fit_cv(const Dataset& train, const Dataset& valid, const FitConfig& cfg);
FitResult fit_multitask(std::span<const Dataset> tasks, const FitConfig& cfg);
FitResult fit_missing(const Dataset& x, const FitConfig& cfg);

/// Dispatch on cfg.mode (multitask requires `fit_multitask`).
FitResult fit(const Dataset& x, const FitConfig& cfg);

}  // namespace uglad
