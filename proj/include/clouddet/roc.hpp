#pragma once

#include <span>
#include <utility>
#include <vector>

#include "clouddet/core.hpp"

namespace clouddet::eval {

/// Anomaly-proportion thresholds used by the accuracy benchmark.
inline const std::vector<double> kDefaultThresholdGrid{0.005, 0.01, 0.02, 0.04, 0.08,
                                                        0.16,  0.32, 0.64, 0.8,  0.95};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;  // sorted by fpr, includes (0,0) and (1,1)
  double auc = 0.0;
  std::vector<double> threshold_grid;
  std::size_t param_value = 0;  // L
};

/// For each fraction q, flags the top ceil(q * N) scores (ties broken by index)
/// and records (fpr, tpr). AUC integrates the full score-ordered curve with
/// tied scores grouped, i.e. the Mann-Whitney statistic with half credit.
RocResult roc_curve(std::span<const double> scores, const std::vector<bool>& labels,
                    std::span<const double> thresholds = kDefaultThresholdGrid);

double auc(std::span<const double> scores, const std::vector<bool>& labels);

}  // namespace clouddet::eval
