#include "clouddet/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace clouddet::synth {

namespace {

constexpr double kAmplitude = 1.0;
constexpr double kLevel = 10.0;

/// Splits `total` over the mix fractions by largest remainder.
std::array<std::size_t, 3> allocate(std::size_t total, const AnomalyMix& mix) {
  const std::array<double, 3> frac{mix.spike, mix.trend_shift, mix.period_shift};
  std::array<std::size_t, 3> count{};
  std::array<double, 3> remainder{};
  std::size_t used = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = frac[i] * static_cast<double>(total);
    count[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(count[i]);
    used += count[i];
  }
  while (used < total) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i)
      if (remainder[i] > remainder[best]) best = i;
    ++count[best];
    remainder[best] = -1.0;
    ++used;
  }
  return count;
}

}  // namespace

void SynthSpec::validate() const {
  if (length < 16) throw InvalidArgument("synthetic length must be >= 16");
  if (!(base_period >= 2.0)) throw InvalidArgument("base period must be >= 2");
  if (!(noise_std >= 0.0)) throw InvalidArgument("noise std must be >= 0");
  if (!(anomaly_rate > 0.0 && anomaly_rate <= 0.1)) {
    throw InvalidArgument("anomaly rate must be in (0, 0.1]");
  }
  if (mix.spike < 0 || mix.trend_shift < 0 || mix.period_shift < 0 ||
      std::abs(mix.spike + mix.trend_shift + mix.period_shift - 1.0) > 1e-9) {
    throw InvalidArgument("anomaly mix fractions must be nonnegative and sum to 1");
  }
}

std::size_t labeled_count(const SynthSpec& spec) {
  return static_cast<std::size_t>(std::lround(spec.anomaly_rate * static_cast<double>(spec.length)));
}

SynthResult synth_generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_std);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t n = spec.length;
  const auto counts = allocate(labeled_count(spec), spec.mix);

  // Place anomalies: every spike is one point; each shift kind is one segment.
  std::vector<InjectedAnomaly> plan;
  for (std::size_t i = 0; i < counts[0]; ++i) plan.push_back({AnomalyKind::spike, 0, 1});
  if (counts[1] > 0) plan.push_back({AnomalyKind::trend_shift, 0, counts[1]});
  if (counts[2] > 0) plan.push_back({AnomalyKind::period_shift, 0, counts[2]});

  const std::size_t margin =
      std::min(n / 10, static_cast<std::size_t>(std::ceil(4.0 * spec.base_period)));
  const auto gap = static_cast<std::size_t>(std::ceil(spec.base_period));
  std::vector<std::pair<std::size_t, std::size_t>> taken;  // [start, end)
  for (auto& a : plan) {
    if (a.length + margin + 1 > n) throw InvalidArgument("series too short for anomaly plan");
    std::uniform_int_distribution<std::size_t> pick(margin, n - a.length - 1);
    std::size_t tries = 0;
    while (true) {
      const std::size_t s = pick(rng);
      const bool clear = std::none_of(taken.begin(), taken.end(), [&](const auto& t) {
        return s < t.second + gap && t.first < s + a.length + gap;
      });
      // Fall back to overlap-only checks when the series is too crowded.
      const bool disjoint = std::none_of(taken.begin(), taken.end(), [&](const auto& t) {
        return s < t.second && t.first < s + a.length;
      });
      if (clear || (++tries > 10000 && disjoint)) {
        a.start = s;
        taken.emplace_back(s, s + a.length);
        break;
      }
    }
  }
  std::sort(plan.begin(), plan.end(), [](const auto& a, const auto& b) { return a.start < b.start; });

  SynthResult out;
  out.series.node = {"synthetic", "cluster", "node"};
  out.series.metric = "value";
  out.series.granularity = Granularity::hour;
  out.series.values.resize(n);
  out.series.missing.assign(n, false);
  out.labels.assign(n, false);

  // Instantaneous frequency (cycles per sample) integrated into a phase, so
  // period shifts stay continuous.
  std::vector<double> freq(n, 1.0 / spec.base_period);
  std::vector<double> offset(n, 0.0);
  std::vector<double> spikes(n, 0.0);
  for (const auto& a : plan) {
    for (std::size_t i = a.start; i < a.start + a.length; ++i) out.labels[i] = true;
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    switch (a.kind) {
      case AnomalyKind::spike:
        spikes[a.start] = sign * (6.0 + 3.0 * unit(rng)) * std::max(spec.noise_std, 1e-3);
        break;
      case AnomalyKind::trend_shift: {
        // Slope jumps from 0 to +-0.15 amplitude per sample over the segment;
        // the accumulated level persists afterwards.
        const double slope = sign * 0.15 * kAmplitude;
        for (std::size_t i = a.start; i < n; ++i) {
          const double steps = static_cast<double>(std::min(i - a.start + 1, a.length));
          offset[i] += slope * steps;
        }
        break;
      }
      case AnomalyKind::period_shift: {
        const double factor = unit(rng) < 0.5 ? 2.0 : 0.5;
        for (std::size_t i = a.start; i < a.start + a.length; ++i) freq[i] *= factor;
        break;
      }
    }
  }

  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.series.values[i] = kLevel + kAmplitude * std::sin(2.0 * std::numbers::pi * phase) +
                           offset[i] + spikes[i] + noise(rng);
    phase += freq[i];
  }
  out.anomalies = std::move(plan);
  return out;
}

}  // namespace clouddet::synth
