#include "uglad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "uglad/errors.hpp"

namespace uglad {

MetricReport aupr_auc(const Matrix& predicted, const Matrix& adjacency) {
  if (!predicted.same_shape(adjacency) || !predicted.is_square()) {
    throw Error(ErrorCode::DimensionMismatch, "aupr_auc: prediction and truth differ in shape");
  }
  const std::size_t d = predicted.rows();
  std::vector<double> scores;
  std::vector<bool> labels;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      scores.push_back(std::abs(predicted(i, j)));
      labels.push_back(adjacency(i, j) != 0.0);
    }

  MetricReport report;
  report.n_positive = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  report.n_negative = labels.size() - report.n_positive;
  if (report.n_positive == 0 || report.n_negative == 0) {
    throw Error(ErrorCode::DegenerateLabels, "aupr_auc: truth has a single class");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Walk tie groups from the highest score down.
  const auto pos = static_cast<double>(report.n_positive);
  const auto neg = static_cast<double>(report.n_negative);
  double tp = 0.0, fp = 0.0;
  double auc_sum = 0.0;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    double group_tp = 0.0, group_fp = 0.0;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) {
      (labels[order[end]] ? group_tp : group_fp) += 1.0;
      ++end;
    }
    // Positives in this group beat all negatives seen below, and tie with the
    // group's own negatives.
    auc_sum += group_tp * (neg - fp - group_fp) + 0.5 * group_tp * group_fp;
    tp += group_tp;
    fp += group_fp;
    const double recall = tp / pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    start = end;
  }
  report.auc = auc_sum / (pos * neg);
  report.aupr = ap;
  return report;
}

MetricReport aupr_auc(const Matrix& predicted, const GroundTruth& truth) {
  return aupr_auc(predicted, truth.adjacency);
}

}  // namespace uglad
