#include "clouddet/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "clouddet/loess.hpp"
#include "clouddet/periodicity.hpp"
#include "clouddet/stl.hpp"

namespace clouddet::scoring {

ResidualStats residual_stats(std::span<const double> residuals) {
  ResidualStats s;
  s.count = residuals.size();
  if (residuals.empty()) return s;
  const auto n = static_cast<double>(residuals.size());
  s.mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : residuals) ss += (r - s.mean) * (r - s.mean);
  s.std = std::sqrt(ss / n);
  return s;
}

Aggregator Aggregator::weighted(std::array<double, 3> w) {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw InvalidArgument("aggregator weights must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("aggregator weights must sum to 1");
  return {Kind::weighted_average, w};
}

Aggregator Aggregator::parse(std::string_view text) {
  if (text == "min") return minimum();
  if (text == "max") return maximum();
  if (text == "avg" || text == "mean") return equal_weights();
  if (text.starts_with("avg:")) {
    std::array<double, 3> w{};
    std::string_view rest = text.substr(4);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto comma = rest.find(',');
      const auto token = rest.substr(0, comma);
      const std::string owned(token);
      std::size_t used = 0;
      try {
        w[i] = std::stod(owned, &used);
      } catch (const std::exception&) {
        throw InvalidArgument("bad aggregator weight '" + owned + "'");
      }
      if (used != owned.size()) throw InvalidArgument("bad aggregator weight '" + owned + "'");
      if ((i < 2) != (comma != std::string_view::npos)) {
        throw InvalidArgument("weighted aggregator needs exactly three weights");
      }
      if (comma != std::string_view::npos) rest = rest.substr(comma + 1);
    }
    return weighted(w);
  }
  throw InvalidArgument("unknown aggregator '" + std::string(text) + "'");
}

std::string Aggregator::to_string() const {
  switch (kind) {
    case Kind::min:
      return "min";
    case Kind::max:
      return "max";
    case Kind::weighted_average: {
      std::string s = "avg:";
      for (std::size_t i = 0; i < 3; ++i) {
        if (i) s += ",";
        char buf[32];
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), weights[i]);
        s.append(buf, end);
      }
      return s;
    }
  }
  return "?";
}

SpikeMode parse_spike_mode(std::string_view text) {
  if (text == "hinge") return SpikeMode::hinge;
  if (text == "verbatim") return SpikeMode::verbatim;
  throw InvalidArgument("unknown spike mode '" + std::string(text) + "'");
}

std::string_view to_string(SpikeMode mode) {
  return mode == SpikeMode::hinge ? "hinge" : "verbatim";
}

double score_periodic(double period, double previous_period) {
  if (!(previous_period > 0.0)) throw InvalidArgument("previous period must be positive");
  return std::min(std::abs(period - previous_period) / previous_period, 1.0);
}

TrendState estimate_slope(std::span<const double> trend) {
  const std::size_t n = trend.size();
  if (n < 2) throw InvalidArgument("slope needs at least two points");
  const double xbar = static_cast<double>(n - 1) / 2.0;
  const double ybar = std::accumulate(trend.begin(), trend.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - xbar;
    sxy += dx * (trend[i] - ybar);
    sxx += dx * dx;
  }
  return {sxy / sxx};
}

double score_trend(double slope, double previous_slope, double eps) {
  if (std::abs(previous_slope) <= eps) return std::abs(slope) <= eps ? 0.0 : 1.0;
  return std::min(std::abs((slope - previous_slope) / previous_slope), 1.0);
}

double score_spike(double residual, const ResidualStats& stats, SpikeMode mode, double eps) {
  const double sigma = std::max(stats.std, eps * std::max(std::abs(stats.mean), 1.0));
  const double band = 3.0 * sigma;
  double raw = 0.0;
  if (mode == SpikeMode::verbatim) {
    raw = std::abs((residual - stats.mean - band) / band);
  } else {
    raw = std::max(std::abs(residual - stats.mean) - band, 0.0) / band;
  }
  return std::min(raw, 1.0);
}

double aggregate(double periodic, double trend, double spike, const Aggregator& agg) {
  switch (agg.kind) {
    case Aggregator::Kind::min:
      return std::min({periodic, trend, spike});
    case Aggregator::Kind::max:
      return std::max({periodic, trend, spike});
    case Aggregator::Kind::weighted_average: {
      const double v =
          agg.weights[0] * periodic + agg.weights[1] * trend + agg.weights[2] * spike;
      return std::clamp(v, 0.0, 1.0);
    }
  }
  return 0.0;
}

WindowAnalysis analyze_window(std::span<const double> window, std::size_t max_candidates) {
  WindowAnalysis a;
  const auto estimate = periodicity::detect_period(window, max_candidates);
  if (estimate.validated) {
    if (auto params = stl::default_stl_params(estimate, Granularity::hour);
        params && window.size() >= 2 * static_cast<std::size_t>(params->n_p)) {
      auto parts = stl::stl_decompose(window, *params);
      a.period = estimate.period;
      a.used_stl = true;
      a.trend = std::move(parts.trend);
      a.residual = std::move(parts.residual);
    }
  }
  if (!a.used_stl) {
    // No usable period: robust degree-1 loess detrend over a short span.
    if (estimate.validated) a.period = estimate.period;
    a.trend = loess::robust_loess(window, kFallbackWidth, kFallbackPasses);
    a.residual.resize(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) a.residual[i] = window[i] - a.trend[i];
  }
  a.slope = estimate_slope(a.trend).slope;
  return a;
}

std::vector<ScoreRecord> score_series(std::span<const double> values,
                                      const ScoringOptions& options) {
  const std::size_t history = options.history;
  if (history < kMinHistory) {
    throw InvalidArgument("history length L must be >= " + std::to_string(kMinHistory));
  }
  std::vector<ScoreRecord> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i].timestamp_index = static_cast<std::int64_t>(i);
    out[i].warmup = true;
  }
  if (values.size() < history + 1) return out;

  // residual_of[k] is the residual of timestamp k as computed when k was the
  // newest point of its window; the first window seeds indices 0..L.
  std::vector<double> residual_of(values.size(), 0.0);
  std::optional<double> last_period;
  std::optional<double> previous_slope;
  for (std::size_t n = history; n < values.size(); ++n) {
    const auto window = values.subspan(n - history, history + 1);
    const auto a = analyze_window(window, options.max_candidates);
    if (n == history) {
      std::copy(a.residual.begin(), a.residual.end(), residual_of.begin());
    } else {
      residual_of[n] = a.residual.back();
    }

    if (previous_slope) {
      auto& rec = out[n];
      rec.warmup = false;
      // Periodic score only when this window has a usable period; compare
      // against the most recent window that had one.
      if (a.used_stl && last_period) rec.periodic = score_periodic(*a.period, *last_period);
      rec.trend = score_trend(a.slope, *previous_slope);
      const auto stats =
          residual_stats(std::span<const double>(residual_of).subspan(n - history, history));
      rec.spike = score_spike(residual_of[n], stats, options.spike_mode);
      rec.aggregated = aggregate(rec.periodic, rec.trend, rec.spike, options.aggregator);
    }
    if (a.used_stl) last_period = a.period;
    previous_slope = a.slope;
  }
  return out;
}

std::vector<ScoreRecord> score_series(const MetricSeries& series, const ScoringOptions& options) {
  auto out = score_series(std::span<const double>(series.values), options);
  for (auto& rec : out) {
    rec.node = series.node;
    rec.metric = series.metric;
  }
  return out;
}

}  // namespace clouddet::scoring
