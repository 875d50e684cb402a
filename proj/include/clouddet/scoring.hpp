#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clouddet/core.hpp"

namespace clouddet::scoring {

struct TrendState {
  double slope = 0.0;  // value units per sample
};

/// Mean and population standard deviation of the residuals preceding the current one.
struct ResidualStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

ResidualStats residual_stats(std::span<const double> residuals);

struct Aggregator {
  enum class Kind { min, max, weighted_average };
  Kind kind = Kind::weighted_average;
  std::array<double, 3> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  static Aggregator minimum() { return {Kind::min, {}}; }
  static Aggregator maximum() { return {Kind::max, {}}; }
  /// Weights must be nonnegative and sum to 1.
  static Aggregator weighted(std::array<double, 3> w);
  static Aggregator equal_weights() { return weighted({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}); }

  /// "min", "max", "avg" or "avg:w1,w2,w3".
  static Aggregator parse(std::string_view text);
  std::string to_string() const;
};

enum class SpikeMode { verbatim, hinge };
SpikeMode parse_spike_mode(std::string_view text);
std::string_view to_string(SpikeMode mode);

inline constexpr double kSlopeEps = 1e-9;
inline constexpr double kSigmaEps = 1e-6;

double score_periodic(double period, double previous_period);
TrendState estimate_slope(std::span<const double> trend);
double score_trend(double slope, double previous_slope, double eps = kSlopeEps);
double score_spike(double residual, const ResidualStats& stats, SpikeMode mode = SpikeMode::hinge,
                   double eps = kSigmaEps);
double aggregate(double periodic, double trend, double spike, const Aggregator& agg);

struct ScoringOptions {
  std::size_t history = 48;  // L
  Aggregator aggregator = Aggregator::equal_weights();
  SpikeMode spike_mode = SpikeMode::hinge;
  std::size_t max_candidates = 5;
};

/// Smallest history length the pipeline accepts. Interactive entry points
/// (the HTTP API and `detect`) require kMinApiHistory instead.
inline constexpr std::size_t kMinHistory = 4;
inline constexpr std::size_t kMinApiHistory = 8;

/// Loess span and bisquare passes used to detrend windows without a usable period.
inline constexpr std::size_t kFallbackWidth = 7;
inline constexpr int kFallbackPasses = 2;

/// What the detector saw in one window; exposed for diagnostics and tests.
struct WindowAnalysis {
  std::optional<double> period;
  bool used_stl = false;
  double slope = 0.0;
  std::vector<double> trend;
  std::vector<double> residual;
};

WindowAnalysis analyze_window(std::span<const double> window, std::size_t max_candidates = 5);

/// Incremental scoring: each index n >= L is scored from the L+1 most recent
/// points only. Indices up to and including L are warmup records.
std::vector<ScoreRecord> score_series(const MetricSeries& series, const ScoringOptions& options);
std::vector<ScoreRecord> score_series(std::span<const double> values,
                                      const ScoringOptions& options);

}  // namespace clouddet::scoring
