#include "clouddet/ranking.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace clouddet::analytics {

std::vector<NodeRank> rank_nodes(std::span<const ScoreRecord> records) {
  if (records.empty()) throw InvalidArgument("rank_nodes needs at least one record");
  struct Acc {
    double total = 0.0;
    std::map<std::string, std::pair<double, std::size_t>> metric;
  };
  std::map<NodePath, Acc> acc;
  for (const auto& r : records) {
    auto& a = acc[r.node];
    a.total += r.aggregated;
    auto& m = a.metric[r.metric];
    m.first += r.aggregated;
    ++m.second;
  }
  std::vector<NodeRank> out;
  out.reserve(acc.size());
  for (const auto& [node, a] : acc) {
    NodeRank nr;
    nr.node = node;
    nr.total_score = a.total;
    for (const auto& [metric, sum] : a.metric) {
      nr.per_metric_mean[metric] = sum.first / static_cast<double>(sum.second);
    }
    out.push_back(std::move(nr));
  }
  std::sort(out.begin(), out.end(), [](const NodeRank& a, const NodeRank& b) {
    if (a.total_score != b.total_score) return a.total_score > b.total_score;
    return std::tie(a.node.node_id, a.node) < std::tie(b.node.node_id, b.node);
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

std::vector<CenterScore> spatial_rollup(std::span<const ScoreRecord> records,
                                        double cluster_threshold,
                                        std::span<const NodePath> hierarchy) {
  if (!(cluster_threshold >= 0.0)) throw InvalidArgument("cluster threshold must be >= 0");
  // center -> cluster -> node -> sum
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> tree;
  for (const auto& p : hierarchy) tree[p.center_id][p.cluster_id][p.node_id] += 0.0;
  for (const auto& r : records) tree[r.node.center_id][r.node.cluster_id][r.node.node_id] += r.aggregated;

  std::vector<CenterScore> out;
  for (const auto& [center, clusters] : tree) {
    CenterScore c;
    c.center_id = center;
    for (const auto& [cluster, nodes] : clusters) {
      ClusterScore cl;
      cl.cluster_id = cluster;
      cl.node_scores = nodes;
      for (const auto& [node, s] : nodes) cl.score += s;
      c.score += cl.score;
      if (cl.score > cluster_threshold) c.clusters.push_back(std::move(cl));
    }
    std::stable_sort(c.clusters.begin(), c.clusters.end(),
                     [](const ClusterScore& a, const ClusterScore& b) { return a.score > b.score; });
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CenterScore& a, const CenterScore& b) { return a.score > b.score; });
  return out;
}

std::vector<RollupPoint> temporal_rollup(std::span<const ScoreRecord> records, Granularity native,
                                         Granularity target) {
  const auto from = step_seconds(native);
  const auto to = step_seconds(target);
  if (to < from) {
    throw InvalidArgument("cannot roll " + std::string(to_string(native)) + " records up to " +
                          std::string(to_string(target)));
  }
  const std::int64_t ratio = to / from;
  auto bucket = [ratio](std::int64_t index) {
    return index >= 0 ? index / ratio : -((-index + ratio - 1) / ratio);
  };

  std::set<std::string> metrics;
  std::map<std::int64_t, std::map<std::string, double>> sums;
  for (const auto& r : records) {
    metrics.insert(r.metric);
    sums[bucket(r.timestamp_index)][r.metric] += r.aggregated;
  }

  std::vector<RollupPoint> out;
  out.reserve(sums.size());
  for (const auto& [t, by_metric] : sums) {
    RollupPoint p;
    p.timestamp_index = t;
    for (const auto& m : metrics) {
      const auto it = by_metric.find(m);
      p.per_metric_sum[m] = it == by_metric.end() ? 0.0 : it->second;
      p.is_top5[m] = false;
    }
    out.push_back(std::move(p));
  }

  std::vector<std::size_t> order(out.size());
  for (const auto& m : metrics) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // out is ascending in time, so a stable sort keeps earlier buckets first on ties.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return out[a].per_metric_sum[m] > out[b].per_metric_sum[m];
    });
    for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i) {
      out[order[i]].is_top5[m] = true;
    }
  }
  return out;
}

}  // namespace clouddet::analytics
