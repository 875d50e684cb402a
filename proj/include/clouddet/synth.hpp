#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "clouddet/core.hpp"

namespace clouddet::synth {

struct AnomalyMix {
  double spike = 0.5;
  double trend_shift = 0.25;
  double period_shift = 0.25;
};

/// Labeled synthetic trace: sine(base_period) + Gaussian noise with injected
/// spikes, trend shifts and period shifts.
struct SynthSpec {
  std::size_t length = 1427;
  double base_period = 24.0;
  double noise_std = 0.1;
  double anomaly_rate = 0.017;
  AnomalyMix mix;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class AnomalyKind { spike, trend_shift, period_shift };

struct InjectedAnomaly {
  AnomalyKind kind;
  std::size_t start;
  std::size_t length;
};

struct SynthResult {
  MetricSeries series;
  std::vector<bool> labels;  // one per sample
  std::vector<InjectedAnomaly> anomalies;
};

/// Number of labeled points: round(anomaly_rate * length).
std::size_t labeled_count(const SynthSpec& spec);

SynthResult synth_generate(const SynthSpec& spec);

}  // namespace clouddet::synth
