#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "clouddet/core.hpp"

namespace clouddet::periodicity {

/// One-sided power spectrum of a mean-centered window, bins k = 0 .. ceil((N-1)/2).
struct Spectrum {
  std::vector<double> powers;
  std::vector<std::complex<double>> dft;
  std::size_t n = 0;
};

/// Sample autocorrelation normalized to ACF(0) = 1, lags 0 .. ceil((N-1)/2).
struct AcfSeries {
  std::vector<double> values;
};

struct PeriodEstimate {
  std::optional<double> period;  // samples
  std::size_t candidate_k = 0;
  bool validated = false;

  bool present() const { return period.has_value(); }
};

inline constexpr std::size_t kDefaultMaxCandidates = 5;

/// Highest bin index used by both the periodogram and the ACF.
std::size_t half_range(std::size_t n);

Spectrum periodogram(std::span<const double> data);
inline Spectrum periodogram(const HistoryWindow& w) { return periodogram(w.data); }

/// Sum of |X_k|^2 over the full (two-sided) spectrum reconstructed from the one-sided bins.
double total_power(const Spectrum& s);

/// Returns nullopt when the window has zero variance.
std::optional<AcfSeries> autocorrelation(std::span<const double> data);
inline std::optional<AcfSeries> autocorrelation(const HistoryWindow& w) {
  return autocorrelation(w.data);
}

/// Lags that sit on a hill of the ACF: acf[t] > acf[t-1] and acf[t] >= acf[t+1].
/// The second comparison makes the first lag of a plateau the hill.
std::vector<std::size_t> acf_hills(const AcfSeries& acf);

/// Two-tier detection: periodogram candidates, each validated by the nearest
/// ACF hill within +-N/(k(k+1)) of N/k whose ACF value clears 2/sqrt(N).
/// Returns the hill lag of the most powerful validated candidate. Hill
/// positions are taken from the lag-bias-corrected ACF.
PeriodEstimate detect_period(std::span<const double> data,
                             std::size_t max_candidates = kDefaultMaxCandidates);
inline PeriodEstimate detect_period(const HistoryWindow& w,
                                    std::size_t max_candidates = kDefaultMaxCandidates) {
  return detect_period(w.data, max_candidates);
}

}  // namespace clouddet::periodicity
