#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clouddet/core.hpp"
#include "clouddet/roc.hpp"
#include "clouddet/scoring.hpp"
#include "clouddet/synth.hpp"

namespace clouddet::eval {

/// History lengths 5, 10, ..., 50.
std::vector<std::size_t> default_history_grid();
/// Prefix lengths 100, 200, ..., 700.
std::vector<std::size_t> default_scale_lengths();

struct LabeledSeries {
  MetricSeries series;
  std::vector<bool> labels;
};

struct AccuracyRun {
  std::size_t history = 0;
  std::optional<RocResult> roc;
  std::string error;
};

struct AccuracyTable {
  std::vector<AccuracyRun> runs;
  double mean_auc = 0.0;  // over runs that completed
  std::size_t threshold_count = 0;

  /// Number of (L, threshold) evaluations that produced a ROC point.
  std::size_t evaluations() const;
};

struct AccuracyOptions {
  std::vector<std::size_t> history_grid = default_history_grid();
  std::vector<double> threshold_grid = kDefaultThresholdGrid;
  scoring::Aggregator aggregator = scoring::Aggregator::equal_weights();
  scoring::SpikeMode spike_mode = scoring::SpikeMode::hinge;
};

/// Scores every series once per L and sweeps the thresholds over the pooled
/// scores. A failing L is recorded and the remaining runs continue.
AccuracyTable run_accuracy_bench(std::span<const LabeledSeries> data, const AccuracyOptions& options);

struct SuiteResult {
  std::vector<std::uint64_t> seeds;
  std::vector<AccuracyTable> tables;  // one per seed
  double mean_auc = 0.0;              // mean of the per-seed mean AUCs
};

/// Runs the accuracy bench on one synthetic series per seed (seeds
/// first_seed .. first_seed + count - 1, other fields from `spec`).
SuiteResult run_synthetic_suite(const synth::SynthSpec& spec, std::size_t count, const AccuracyOptions& options,
                                std::uint64_t first_seed = 1);

struct TimingRow {
  std::size_t length = 0;
  double seconds = 0.0;  // median over repetitions
  std::vector<double> samples;
};

struct ScalabilityTable {
  std::vector<TimingRow> rows;
  double slope = 0.0;          // seconds per point
  double intercept = 0.0;
  std::optional<double> r2;    // absent with fewer than two lengths
};

using Detector = std::function<void(std::span<const double>)>;

/// Default detector: the full periodicity + STL + scoring pipeline.
Detector pipeline_detector(const scoring::ScoringOptions& options);

/// Times `detector` on prefixes of `values`, one round over all lengths per
/// repetition. Runs sequentially.
ScalabilityTable run_scalability_bench(std::span<const double> values,
                                       std::span<const std::size_t> lengths,
                                       std::size_t repetitions, const Detector& detector);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::optional<double> r2;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

void write_accuracy_text(std::ostream& os, const AccuracyTable& table);
void write_accuracy_csv(std::ostream& os, const AccuracyTable& table);
void write_scalability_text(std::ostream& os, const ScalabilityTable& table);
void write_scalability_csv(std::ostream& os, const ScalabilityTable& table);

}  // namespace clouddet::eval
