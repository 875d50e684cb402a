// Prints one PASS/FAIL line per acceptance criterion. Exits 1 when any
// criterion fails, unless --report FILE is given: then the lines are also
// written to FILE and only a crash or an exception fails the run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "clouddet/bench.hpp"
#include "clouddet/kde.hpp"
#include "clouddet/lof.hpp"
#include "clouddet/periodicity.hpp"
#include "clouddet/projection.hpp"
#include "clouddet/ranking.hpp"
#include "clouddet/scoring.hpp"
#include "clouddet/stl.hpp"
#include "clouddet/synth.hpp"
#include "oracles.hpp"

using namespace clouddet;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Windows are cut from generated metric series the way the detector cuts
// them: random spec, random L, random position.
Outcome a1_stl_identity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  std::size_t points = 0;
  for (int w = 0; w < 1000; ++w) {
    synth::SynthSpec spec;
    spec.seed = rng();
    spec.length = 300 + rng() % 700;
    spec.base_period = static_cast<double>(4 + rng() % 45);
    spec.noise_std = 0.5 * u(rng);
    const auto values = synth::synth_generate(spec).series.values;
    const auto p = static_cast<std::size_t>(spec.base_period);
    const std::size_t len = 2 * p + 1 + rng() % 200;
    const std::size_t start = rng() % (values.size() - len + 1);
    const std::span<const double> d(values.data() + start, len);
    periodicity::PeriodEstimate est;
    est.period = spec.base_period;
    const auto c = stl::stl_decompose(d, *stl::default_stl_params(est, Granularity::hour));
    for (std::size_t i = 0; i < len; ++i) {
      worst = std::max(worst, std::abs(d[i] - (c.seasonal[i] + c.trend[i] + c.residual[i])));
    }
    points += len;
  }
  const double s = seconds_since(t0);
  return {worst == 0.0 && s < 30.0,
          fmt("max |d-(S+T+R)| = %g over 1000 windows (%zu points) in %.2f s", worst, points, s)};
}

Outcome a2_score_bounds() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<scoring::Aggregator> aggs{scoring::Aggregator::equal_weights(), scoring::Aggregator::parse("min"),
                                              scoring::Aggregator::parse("max")};
  std::size_t computed = 0;
  std::size_t out_of_range = 0;
  std::size_t dirty_warmup = 0;
  while (computed < 10000) {
    const std::size_t n = 20 + rng() % 180;
    const double scale = std::pow(10.0, 6.0 * u(rng) - 3.0);
    std::vector<double> v(n);
    const int shape = static_cast<int>(rng() % 4);
    for (std::size_t i = 0; i < n; ++i) {
      switch (shape) {
        case 0: v[i] = scale * (u(rng) - 0.5); break;
        case 1: v[i] = scale * std::sin(static_cast<double>(i) / (1.0 + 10.0 * u(rng))); break;
        case 2: v[i] = rng() % 7 == 0 ? scale : 0.0; break;
        default: v[i] = scale; break;
      }
    }
    scoring::ScoringOptions o;
    o.history = scoring::kMinHistory + rng() % 40;
    o.aggregator = aggs[rng() % aggs.size()];
    o.spike_mode = rng() % 2 ? scoring::SpikeMode::hinge : scoring::SpikeMode::verbatim;
    for (const auto& r : scoring::score_series(v, o)) {
      ++computed;
      for (double x : {r.periodic, r.trend, r.spike, r.aggregated}) {
        if (!(x >= 0.0 && x <= 1.0)) ++out_of_range;
      }
      if (r.warmup && (r.periodic != 0.0 || r.trend != 0.0 || r.spike != 0.0 || r.aggregated != 0.0)) {
        ++dirty_warmup;
      }
    }
  }
  return {out_of_range == 0 && dirty_warmup == 0,
          fmt("%zu records, %zu out of [0,1], %zu non-zero warmup", computed, out_of_range, dirty_warmup)};
}

Outcome a3_period_recovery() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  for (int p : {12, 24, 168}) {
    int hits = 0;
    for (int seed = 1; seed <= 100; ++seed) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 7919 + p);
      // Unit sine has power 1/2; noise variance 0.05 gives 10 dB.
      std::normal_distribution<double> noise(0.0, std::sqrt(0.05));
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      const double ph = phase(rng);
      std::vector<double> v(4 * static_cast<std::size_t>(p));
      for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / p + ph) + noise(rng);
      }
      const auto e = periodicity::detect_period(v);
      if (e.period && std::abs(*e.period - p) <= 1.0) ++hits;
    }
    pass = pass && hits >= 95;
    detail += fmt("P=%d %d/100  ", p, hits);
  }
  const double s = seconds_since(t0);
  return {pass && s < 60.0, detail + fmt("in %.2f s", s)};
}

Outcome a4_detection_quality() {
  const auto t0 = Clock::now();
  const auto suite = eval::run_synthetic_suite(synth::SynthSpec{}, 20, eval::AccuracyOptions{});
  const double s = seconds_since(t0);
  return {suite.mean_auc >= 0.85 && s < 300.0, fmt("mean AUC %.4f over 20 seeds in %.1f s", suite.mean_auc, s)};
}

Outcome a5_scalability() {
  synth::SynthSpec spec;
  spec.seed = 5;
  const auto values = synth::synth_generate(spec).series.values;
  const auto lengths = eval::default_scale_lengths();
  const auto t = eval::run_scalability_bench(values, lengths, 10, eval::pipeline_detector({}));
  const double r2 = t.r2.value_or(0.0);
  return {r2 >= 0.95, fmt("R^2 %.4f, slope %.3e s/point over lengths 100..700", r2, t.slope)};
}

Outcome a6_lof_oracle() {
  std::mt19937_64 rng(606);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t ks[] = {3, 5, 10};
  double worst = 0.0;
  for (int set = 0; set < 50; ++set) {
    const std::size_t k = ks[set % 3];
    const std::size_t n = k + 2 + rng() % (49 - k);
    const std::size_t dim = 2 + rng() % 4;
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts) {
      for (auto& x : p) x = g(rng);
    }
    if (set % 5 == 0) pts.back() = pts.front();
    const auto got = analytics::lof_scores(pts, k).raw;
    const auto want = oracle::lof(pts, k);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  return {worst <= 1e-9, fmt("max |lof - reference| = %.3g over 50 sets", worst)};
}

Outcome a7_harness_shape() {
  synth::SynthSpec spec;
  spec.seed = 7;
  const auto r = synth::synth_generate(spec);
  const std::vector<eval::LabeledSeries> data{{r.series, r.labels}};
  const auto table = eval::run_accuracy_bench(data, eval::AccuracyOptions{});
  const std::vector<double> verbatim{0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64, 0.8, 0.95};
  std::vector<std::size_t> ls;
  bool grids = true;
  for (const auto& run : table.runs) {
    ls.push_back(run.history);
    grids = grids && run.roc && run.roc->threshold_grid == verbatim;
  }
  const std::vector<std::size_t> want_ls{5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  const bool pass = ls == want_ls && grids && table.threshold_count == 10;
  return {pass, fmt("%zu L-values x %zu thresholds, verbatim grid %s", ls.size(), table.threshold_count,
                    grids ? "yes" : "no")};
}

Outcome a8_pca() {
  std::mt19937_64 rng(808);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> src(300);
  for (auto& x : src) x = g(rng);
  std::vector<double> a(src.size()), b(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    a[i] = 3.0 * src[i] + 10.0;
    b[i] = -0.5 * src[i] + 2.0;
  }
  const std::vector<std::vector<double>> metrics{a, b};
  const auto proj = analytics::pca_project(metrics);
  const double r = std::abs(oracle::pearson(proj, src));
  return {r >= 0.999, fmt("|corr| %.6f", r)};
}

Outcome a9_kde_mass() {
  std::mt19937_64 rng(909);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<analytics::Point2> pts(200);
  for (auto& p : pts) p = {g(rng) * 2.0, g(rng) + (rng() % 2 ? 3.0 : -3.0)};
  const auto f = analytics::kde_density(pts, 256, std::nullopt, 5.0);
  double mass = 0.0;
  for (double d : f.grid) mass += d;
  mass *= f.cell_area();
  return {mass >= 0.98 && mass <= 1.02, fmt("integral %.5f", mass)};
}

Outcome a10_rollup_conservation() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoreRecord> recs;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < 4; ++k) {
      for (int n = 0; n < 5; ++n) {
        for (const char* m : {"cpu", "mem", "disk"}) {
          for (std::int64_t t = 0; t < 96; ++t) {
            ScoreRecord r;
            r.node = {"c" + std::to_string(c), "k" + std::to_string(k), "n" + std::to_string(n)};
            r.metric = m;
            r.timestamp_index = 1000 * 24 + t;
            r.aggregated = u(rng) < 0.3 ? u(rng) : 0.0;
            total += r.aggregated;
            recs.push_back(std::move(r));
          }
        }
      }
    }
  }
  double spatial = 0.0;
  for (const auto& c : analytics::spatial_rollup(recs, 0.0)) spatial += c.score;
  double temporal = 0.0;
  for (const auto& p : analytics::temporal_rollup(recs, Granularity::hour, Granularity::day)) {
    for (const auto& [m, v] : p.per_metric_sum) temporal += v;
  }
  const double es = std::abs(spatial - total);
  const double et = std::abs(temporal - total);
  return {es <= 1e-9 && et <= 1e-9, fmt("|spatial - total| %.3g, |temporal - total| %.3g", es, et)};
}

}  // namespace

int main(int argc, char** argv) {
  const bool report = argc > 2 && std::strcmp(argv[1], "--report") == 0;
  std::FILE* copy = report ? std::fopen(argv[2], "w") : nullptr;
  if (report && !copy) {
    std::printf("cannot write %s\n", argv[2]);
    return 2;
  }
  const auto line = [&](const char* f, auto... args) {
    std::printf(f, args...);
    std::fflush(stdout);
    if (copy) {
      std::fprintf(copy, f, args...);
      std::fflush(copy);
    }
  };
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"A1 STL identity", a1_stl_identity},           {"A2 score bounds", a2_score_bounds},
      {"A3 periodicity recovery", a3_period_recovery}, {"A4 detection quality", a4_detection_quality},
      {"A5 scalability", a5_scalability},             {"A6 LOF oracle", a6_lof_oracle},
      {"A7 harness shape", a7_harness_shape},         {"A8 PCA projection", a8_pca},
      {"A9 KDE mass", a9_kde_mass},                   {"A10 rollup conservation", a10_rollup_conservation},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      line("ERROR %-26s %s\n", name, e.what());
      return 2;
    }
    if (!o.pass) ++failed;
    line("%s %-26s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  }
  line("%d/10 criteria passed\n", 10 - failed);
  if (copy) std::fclose(copy);
  return failed && !report ? 1 : 0;
}
