#pragma once

#include <cstddef>

#include "uglad/matrix.hpp"
#include "uglad/synthetic.hpp"

namespace uglad {

struct MetricReport {
  double aupr = 0.0;
  double auc = 0.0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

/// Edge-ranking metrics over the strict upper triangle. Scores are
/// |predicted_ij|, labels are adjacency_ij != 0. AUC is the Mann-Whitney
/// statistic with ties counting one half; AUPR is average precision over the
/// distinct score thresholds. Throws DegenerateLabels when only one class is
/// present.
MetricReport aupr_auc(const Matrix& predicted, const Matrix& adjacency);
MetricReport aupr_auc(const Matrix& predicted, const GroundTruth& truth);

}  // namespace uglad
