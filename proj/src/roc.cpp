#include "clouddet/roc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clouddet::eval {

namespace {

struct Counts {
  double positives = 0.0;
  double negatives = 0.0;
};

Counts count_labels(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  Counts c;
  for (bool l : labels) (l ? c.positives : c.negatives) += 1.0;
  if (c.positives == 0.0 || c.negatives == 0.0) {
    throw InvalidArgument("ROC needs at least one positive and one negative label");
  }
  return c;
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double auc(std::span<const double> scores, const std::vector<bool>& labels) {
  const auto counts = count_labels(scores, labels);
  const auto order = descending_order(scores);
  double area = 0.0;
  double tp = 0.0;
  double fp = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    // Advance over one group of tied scores, then add its trapezoid.
    double group_tp = 0.0;
    double group_fp = 0.0;
    const double value = scores[order[i]];
    while (i < order.size() && scores[order[i]] == value) {
      (labels[order[i]] ? group_tp : group_fp) += 1.0;
      ++i;
    }
    area += group_fp * (tp + 0.5 * group_tp);
    tp += group_tp;
    fp += group_fp;
  }
  return area / (counts.positives * counts.negatives);
}

RocResult roc_curve(std::span<const double> scores, const std::vector<bool>& labels,
                    std::span<const double> thresholds) {
  const auto counts = count_labels(scores, labels);
  const auto order = descending_order(scores);

  RocResult r;
  r.threshold_grid.assign(thresholds.begin(), thresholds.end());
  r.points.push_back({0.0, 0.0});
  const auto n = static_cast<double>(scores.size());
  for (double q : thresholds) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("threshold fractions must lie in [0,1]");
    const auto flagged = std::min(order.size(), static_cast<std::size_t>(std::ceil(q * n)));
    double tp = 0.0;
    for (std::size_t i = 0; i < flagged; ++i) tp += labels[order[i]] ? 1.0 : 0.0;
    const double fp = static_cast<double>(flagged) - tp;
    r.points.push_back({fp / counts.negatives, tp / counts.positives});
  }
  r.points.push_back({1.0, 1.0});
  std::stable_sort(r.points.begin(), r.points.end(), [](const RocPoint& a, const RocPoint& b) {
    return a.fpr < b.fpr || (a.fpr == b.fpr && a.tpr < b.tpr);
  });
  r.auc = auc(scores, labels);
  return r;
}

}  // namespace clouddet::eval
