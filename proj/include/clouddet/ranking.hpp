#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "clouddet/core.hpp"

namespace clouddet::analytics {

struct NodeRank {
  NodePath node;
  double total_score = 0.0;
  std::map<std::string, double> per_metric_mean;
  int rank = 0;  // 1-based
};

/// Sums the aggregated score over every record of a node and orders nodes by
/// that sum, descending. Equal sums are ordered by node_id, then by full path.
std::vector<NodeRank> rank_nodes(std::span<const ScoreRecord> records);

struct ClusterScore {
  std::string cluster_id;
  double score = 0.0;
  std::map<std::string, double> node_scores;  // node_id -> sum
};

struct CenterScore {
  std::string center_id;
  double score = 0.0;
  std::vector<ClusterScore> clusters;  // only clusters above the threshold, descending
};

/// Center and cluster sums of aggregated scores. `hierarchy` lists nodes that
/// should appear even without records (with score 0).
std::vector<CenterScore> spatial_rollup(std::span<const ScoreRecord> records,
                                        double cluster_threshold,
                                        std::span<const NodePath> hierarchy = {});

struct RollupPoint {
  std::int64_t timestamp_index = 0;  // in target-granularity steps
  std::map<std::string, double> per_metric_sum;
  std::map<std::string, bool> is_top5;
};

/// Per-timestamp, per-metric sums of aggregated scores across nodes, after
/// bucketing record indices from `native` to the coarser `target` step. The
/// five largest sums of each metric are flagged; ties go to the earlier bucket.
std::vector<RollupPoint> temporal_rollup(std::span<const ScoreRecord> records, Granularity native,
                                         Granularity target);

}  // namespace clouddet::analytics
