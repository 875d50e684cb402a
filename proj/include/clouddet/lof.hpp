#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace clouddet::analytics {

struct LofResult {
  std::vector<double> raw;
  std::vector<double> normalized;  // min -> -1, max -> +1; all-equal -> 0
  std::size_t k = 0;
};

/// k used when none is given: min(20, n - 1).
std::size_t default_lof_k(std::size_t count);

/// Local outlier factor (Breunig et al.) on Euclidean distance. The
/// k-distance neighbourhood includes every point tied at the k-distance, and
/// duplicate points give reachability 0; a 1e-10 term keeps lrd finite.
LofResult lof_scores(std::span<const std::vector<double>> vectors,
                     std::optional<std::size_t> k = std::nullopt);

/// Affine map onto [-1, 1]. Values equal within a relative 1e-12 map to 0.
std::vector<double> normalize_lof(std::span<const double> raw);

}  // namespace clouddet::analytics
