#include "clouddet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace clouddet::eval {

std::vector<std::size_t> default_history_grid() {
  std::vector<std::size_t> g;
  for (std::size_t l = 5; l <= 50; l += 5) g.push_back(l);
  return g;
}

std::vector<std::size_t> default_scale_lengths() {
  std::vector<std::size_t> g;
  for (std::size_t l = 100; l <= 700; l += 100) g.push_back(l);
  return g;
}

std::size_t AccuracyTable::evaluations() const {
  std::size_t n = 0;
  for (const auto& r : runs)
    if (r.roc) n += r.roc->threshold_grid.size();
  return n;
}

AccuracyTable run_accuracy_bench(std::span<const LabeledSeries> data,
                                 const AccuracyOptions& options) {
  AccuracyTable table;
  table.threshold_count = options.threshold_grid.size();
  double auc_sum = 0.0;
  std::size_t completed = 0;
  for (std::size_t history : options.history_grid) {
    AccuracyRun run;
    run.history = history;
    try {
      scoring::ScoringOptions so;
      so.history = history;
      so.aggregator = options.aggregator;
      so.spike_mode = options.spike_mode;
      std::vector<double> scores;
      std::vector<bool> labels;
      for (const auto& item : data) {
        if (item.labels.size() != item.series.size()) {
          throw InvalidArgument("labels do not cover series " + item.series.node.key() + ":" +
                                item.series.metric);
        }
        for (const auto& rec : scoring::score_series(item.series, so)) scores.push_back(rec.aggregated);
        labels.insert(labels.end(), item.labels.begin(), item.labels.end());
      }
      auto roc = roc_curve(scores, labels, options.threshold_grid);
      roc.param_value = history;
      auc_sum += roc.auc;
      ++completed;
      run.roc = std::move(roc);
    } catch (const std::exception& e) {
      run.error = e.what();
    }
    table.runs.push_back(std::move(run));
  }
  table.mean_auc = completed ? auc_sum / static_cast<double>(completed) : 0.0;
  return table;
}

SuiteResult run_synthetic_suite(const synth::SynthSpec& spec, std::size_t count, const AccuracyOptions& options,
                                std::uint64_t first_seed) {
  if (count == 0) throw InvalidArgument("synthetic suite needs at least one seed");
  SuiteResult out;
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    synth::SynthSpec one = spec;
    one.seed = first_seed + i;
    auto r = synth::synth_generate(one);
    const LabeledSeries data[] = {{std::move(r.series), std::move(r.labels)}};
    out.seeds.push_back(one.seed);
    out.tables.push_back(run_accuracy_bench(data, options));
    sum += out.tables.back().mean_auc;
  }
  out.mean_auc = sum / static_cast<double>(count);
  return out;
}

Detector pipeline_detector(const scoring::ScoringOptions& options) {
  return [options](std::span<const double> values) { (void)scoring::score_series(values, options); };
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  LinearFit f;
  const std::size_t n = x.size();
  if (n == 0) return f;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (n < 2 || sxx == 0.0) {
    f.intercept = my;
    return f;
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

ScalabilityTable run_scalability_bench(std::span<const double> values,
                                       std::span<const std::size_t> lengths,
                                       std::size_t repetitions, const Detector& detector) {
  if (repetitions == 0) throw InvalidArgument("repetitions must be >= 1");
  ScalabilityTable table;
  for (std::size_t len : lengths) {
    if (len > values.size()) {
      throw InvalidArgument("series has " + std::to_string(values.size()) +
                            " points, fewer than requested length " + std::to_string(len));
    }
    table.rows.push_back({len, 0.0, {}});
    // Untimed first call: plan caches and allocations settle before timing.
    detector(values.first(len));
  }
  // Each round times every length once, so machine-speed drift during the
  // run spreads over all lengths instead of bending the fit.
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (auto& row : table.rows) {
      const auto prefix = values.first(row.length);
      const auto t0 = std::chrono::steady_clock::now();
      detector(prefix);
      const auto t1 = std::chrono::steady_clock::now();
      row.samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
  }
  for (auto& row : table.rows) {
    auto sorted = row.samples;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    if (m) row.seconds = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : table.rows) {
    x.push_back(static_cast<double>(r.length));
    y.push_back(r.seconds);
  }
  const auto fit = fit_line(x, y);
  table.slope = fit.slope;
  table.intercept = fit.intercept;
  table.r2 = fit.r2;
  return table;
}

void write_accuracy_text(std::ostream& os, const AccuracyTable& table) {
  char line[160];
  std::snprintf(line, sizeof line, "%6s  %8s  %s\n", "L", "AUC", "status");
  os << line;
  for (const auto& run : table.runs) {
    if (run.roc) {
      std::snprintf(line, sizeof line, "%6zu  %8.4f  ok\n", run.history, run.roc->auc);
    } else {
      std::snprintf(line, sizeof line, "%6zu  %8s  error: %s\n", run.history, "-", run.error.c_str());
    }
    os << line;
  }
  std::snprintf(line, sizeof line, "mean AUC %.4f over %zu evaluations\n", table.mean_auc,
                table.evaluations());
  os << line;
}

void write_accuracy_csv(std::ostream& os, const AccuracyTable& table) {
  os << "L,threshold,fpr,tpr,auc\n";
  for (const auto& run : table.runs) {
    if (!run.roc) continue;
    // points[0] is (0,0) and the last is (1,1); the rest follow the grid in fpr order.
    std::vector<RocPoint> grid_points(run.roc->points.begin() + 1, run.roc->points.end() - 1);
    for (std::size_t i = 0; i < grid_points.size(); ++i) {
      os << run.history << ',' << run.roc->threshold_grid[i] << ',' << grid_points[i].fpr << ','
         << grid_points[i].tpr << ',' << run.roc->auc << '\n';
    }
  }
}

void write_scalability_text(std::ostream& os, const ScalabilityTable& table) {
  char line[128];
  std::snprintf(line, sizeof line, "%8s  %12s\n", "length", "seconds");
  os << line;
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof line, "%8zu  %12.6f\n", r.length, r.seconds);
    os << line;
  }
  std::snprintf(line, sizeof line, "slope %.3e s/point, intercept %.3e s", table.slope, table.intercept);
  os << line;
  if (table.r2) {
    std::snprintf(line, sizeof line, ", R^2 %.4f", *table.r2);
    os << line;
  }
  os << '\n';
}

void write_scalability_csv(std::ostream& os, const ScalabilityTable& table) {
  os << "length,seconds\n";
  for (const auto& r : table.rows) os << r.length << ',' << r.seconds << '\n';
}

}  // namespace clouddet::eval
