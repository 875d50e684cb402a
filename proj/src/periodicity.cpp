#include "clouddet/periodicity.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

namespace clouddet::periodicity {

namespace {

// FFTW planning is not thread-safe; execution on a plan's own buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  const fftw_complex* output() const { return out_; }
  void run() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_{};
};

RealFft& fft_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

std::vector<double> centered(std::span<const double> data) {
  const double mean =
      std::accumulate(data.begin(), data.end(), 0.0) / static_cast<double>(data.size());
  std::vector<double> out(data.size());
  std::transform(data.begin(), data.end(), out.begin(), [mean](double v) { return v - mean; });
  return out;
}

}  // namespace

std::size_t half_range(std::size_t n) { return n / 2; }  // ceil((n-1)/2) for n >= 1

Spectrum periodogram(std::span<const double> data) {
  const std::size_t n = data.size();
  if (n < 4) throw InvalidArgument("degenerate window: periodogram needs N >= 4");

  const auto c = centered(data);
  auto& fft = fft_for(n);
  std::copy(c.begin(), c.end(), fft.input());
  fft.run();

  const std::size_t kmax = half_range(n);
  Spectrum s;
  s.n = n;
  s.powers.resize(kmax + 1);
  s.dft.resize(kmax + 1);
  for (std::size_t k = 0; k <= kmax; ++k) {
    const std::complex<double> x(fft.output()[k][0], fft.output()[k][1]);
    s.dft[k] = x;
    s.powers[k] = std::norm(x);
  }
  return s;
}

double total_power(const Spectrum& s) {
  if (s.powers.empty()) return 0.0;
  double sum = s.powers[0];
  const bool has_nyquist = s.n % 2 == 0;
  const std::size_t last = s.powers.size() - 1;
  for (std::size_t k = 1; k <= last; ++k) {
    sum += (has_nyquist && k == last) ? s.powers[k] : 2.0 * s.powers[k];
  }
  return sum;
}

namespace {

std::optional<AcfSeries> acf_up_to(std::span<const double> data, std::size_t max_lag) {
  const std::size_t n = data.size();
  const auto c = centered(data);
  const double c0 = std::inner_product(c.begin(), c.end(), c.begin(), 0.0);
  double scale = 0.0;
  for (double v : data) scale = std::max(scale, std::abs(v));
  if (c0 <= 1e-24 * std::max(1.0, scale * scale) * static_cast<double>(n)) return std::nullopt;

  AcfSeries acf;
  acf.values.resize(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double sum = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) sum += c[i] * c[i + lag];
    acf.values[lag] = sum / c0;
  }
  return acf;
}

}  // namespace

std::optional<AcfSeries> autocorrelation(std::span<const double> data) {
  if (data.size() < 4) throw InvalidArgument("degenerate window: autocorrelation needs N >= 4");
  return acf_up_to(data, half_range(data.size()));
}

std::vector<std::size_t> acf_hills(const AcfSeries& acf) {
  std::vector<std::size_t> hills;
  const auto& v = acf.values;
  for (std::size_t t = 1; t + 1 < v.size(); ++t) {
    if (v[t] > v[t - 1] && v[t] >= v[t + 1]) hills.push_back(t);
  }
  return hills;
}

PeriodEstimate detect_period(std::span<const double> data, std::size_t max_candidates) {
  PeriodEstimate none;
  const std::size_t n = data.size();
  if (n < 8) return none;

  // One lag past the reported range so a period of exactly N/2 can still sit on a hill.
  const auto acf = acf_up_to(data, half_range(n) + 1);
  if (!acf) return none;
  const auto spectrum = periodogram(data);

  std::vector<std::size_t> bins;
  for (std::size_t k = 2; k < spectrum.powers.size(); ++k) bins.push_back(k);
  // Descending power; lower k first on equal power.
  std::stable_sort(bins.begin(), bins.end(), [&](std::size_t a, std::size_t b) {
    return spectrum.powers[a] > spectrum.powers[b];
  });
  if (bins.size() > max_candidates) bins.resize(max_candidates);

  // Hills are located on the lag-bias-corrected ACF, r(t) * N / (N - t):
  // the plain estimator's (1 - t/N) envelope pulls peaks toward shorter lags.
  AcfSeries corrected = *acf;
  for (std::size_t t = 0; t < corrected.values.size(); ++t) {
    corrected.values[t] *= static_cast<double>(n) / static_cast<double>(n - t);
  }
  const auto hills = acf_hills(corrected);
  const double bound = 2.0 / std::sqrt(static_cast<double>(n));
  const double nd = static_cast<double>(n);

  for (std::size_t k : bins) {
    if (spectrum.powers[k] <= 0.0) continue;
    const double kd = static_cast<double>(k);
    const double candidate = nd / kd;
    const double tolerance = std::max(1.0, nd / (kd * (kd + 1.0)));

    std::optional<std::size_t> best;
    double best_distance = 0.0;
    for (std::size_t lag : hills) {
      const double distance = std::abs(static_cast<double>(lag) - candidate);
      if (distance > tolerance) continue;
      if (!best || distance < best_distance) {
        best = lag;
        best_distance = distance;
      }
    }
    if (!best) continue;
    const double period = static_cast<double>(*best);
    if (acf->values[*best] <= bound || period < 2.0 || period > nd / 2.0) continue;

    PeriodEstimate est;
    est.period = period;
    est.candidate_k = k;
    est.validated = true;
    return est;
  }
  return none;
}

}  // namespace clouddet::periodicity
