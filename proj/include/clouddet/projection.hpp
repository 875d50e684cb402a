#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace clouddet::analytics {

/// Z-scores with population standard deviation. A zero-variance input maps to zeros.
std::vector<double> standardize(std::span<const double> values);

/// Projection of r aligned metrics (each standardized first) onto their first
/// principal component. Zero-variance metrics are dropped; if none remain the
/// result is all zeros. The loading with the largest magnitude is made positive.
std::vector<double> pca_project(std::span<const std::vector<double>> metrics);

/// Affine map of [min, max] onto [-1, 1]; a constant input maps to zeros.
std::vector<double> normalize_series(std::span<const double> values);

struct FeatureVector {
  std::vector<double> values;  // m(1,1), m(2,1), ..., m(r,1), m(1,2), ..., m(r,n)
  std::size_t metrics = 0;     // r
  std::size_t timestamps = 0;  // n
};

/// Interleaves aligned metric series timestamp by timestamp.
FeatureVector node_feature_vector(std::span<const std::vector<double>> metrics);

/// Standardizes each metric across all nodes and timestamps in place, so that
/// metrics with different units contribute comparably to distances.
void standardize_features(std::vector<FeatureVector>& vectors);

struct MagnetSummary {
  double max = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double std = 0.0;  // population
};

/// Statistics of values[begin, end) for the collapsed-period glyph.
MagnetSummary magnet_summary(std::span<const double> values, std::size_t begin, std::size_t end);

/// Mean over every value of every carrier; nodes without the metric are
/// simply not passed in.
double cluster_baseline(std::span<const std::vector<double>> carriers);

}  // namespace clouddet::analytics
