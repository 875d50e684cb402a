#include "clouddet/loess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "clouddet/core.hpp"

namespace clouddet::loess {

namespace {

double tricube(double r, double h) {
  if (r <= 0.001 * h) return 1.0;
  if (r > 0.999 * h) return 0.0;
  const double u = r / h;
  const double t = 1.0 - u * u * u;
  return t * t * t;
}

std::optional<double> weighted_poly(std::span<const double> y, std::span<const double> robustness,
                                    double x0, std::size_t left, std::size_t right, int degree,
                                    const auto& kernel) {
  double sw = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t j = left; j <= right; ++j) {
    double w = kernel(static_cast<double>(j));
    if (!robustness.empty()) w *= robustness[j];
    sw += w;
    sx += w * static_cast<double>(j);
    sy += w * y[j];
  }
  if (sw <= 0.0) return std::nullopt;
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  if (degree == 0) return ybar;

  double sxx = 0.0;
  double sxy = 0.0;
  double range = static_cast<double>(right - left);
  for (std::size_t j = left; j <= right; ++j) {
    double w = kernel(static_cast<double>(j));
    if (!robustness.empty()) w *= robustness[j];
    const double dx = static_cast<double>(j) - xbar;
    sxx += w * dx * dx;
    sxy += w * dx * (y[j] - ybar);
  }
  // Degenerate spread in x: fall back to the weighted mean.
  if (std::sqrt(sxx / sw) <= 0.001 * range) return ybar;
  return ybar + (sxy / sxx) * (x0 - xbar);
}

}  // namespace

std::optional<double> fit_at(std::span<const double> y, std::span<const double> robustness,
                             double x0, std::size_t left, std::size_t right, int degree,
                             double h) {
  return weighted_poly(y, robustness, x0, left, right, degree,
                       [x0, h](double x) { return tricube(std::abs(x - x0), h); });
}

std::optional<double> smooth_at(std::span<const double> y, std::span<const double> robustness,
                                double x0, std::size_t width, int degree) {
  const std::size_t n = y.size();
  if (n == 0) return std::nullopt;
  if (width > 2 * n) {
    return weighted_poly(y, robustness, x0, 0, n - 1, degree, [](double) { return 1.0; });
  }
  if (width >= n) {
    double h = std::max(x0, static_cast<double>(n - 1) - x0);
    h += static_cast<double>(width - n) / 2.0;
    return fit_at(y, robustness, x0, 0, n - 1, degree, h);
  }
  // Nearest `width` samples around x0, clamped at the ends.
  const double half = static_cast<double>(width / 2);
  const double start = std::clamp(std::round(x0) - half, 0.0, static_cast<double>(n - width));
  const auto left = static_cast<std::size_t>(start);
  const std::size_t right = left + width - 1;
  const double h =
      std::max(x0 - static_cast<double>(left), static_cast<double>(right) - x0);
  return fit_at(y, robustness, x0, left, right, degree, h);
}

std::vector<double> loess_smooth(std::span<const double> values, std::size_t width, int degree,
                                 std::optional<std::span<const double>> robustness_weights) {
  if (width < 3 || width % 2 == 0) throw InvalidArgument("loess width must be odd and >= 3");
  if (degree != 0 && degree != 1) throw InvalidArgument("loess degree must be 0 or 1");
  std::span<const double> rw;
  if (robustness_weights) {
    rw = *robustness_weights;
    if (rw.size() != values.size()) throw InvalidArgument("robustness weights length mismatch");
    if (std::any_of(rw.begin(), rw.end(), [](double w) { return !(w >= 0.0); })) {
      throw InvalidArgument("robustness weights must be nonnegative");
    }
  }

  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto x0 = static_cast<double>(i);
    auto fit = smooth_at(values, rw, x0, width, degree);
    if (!fit && !rw.empty()) fit = smooth_at(values, {}, x0, width, degree);
    out[i] = fit.value_or(values[i]);
  }
  return out;
}

std::vector<double> bisquare_weights(std::span<const double> residual) {
  std::vector<double> abs_r(residual.size());
  std::transform(residual.begin(), residual.end(), abs_r.begin(),
                 [](double r) { return std::abs(r); });
  std::vector<double> sorted = abs_r;
  const std::size_t n = sorted.size();
  const std::size_t mid = n / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  double median = sorted[mid];
  if (n % 2 == 0) {
    const double lower =
        *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  const double h = 6.0 * median;

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (h <= std::numeric_limits<double>::min()) {
      w[i] = abs_r[i] == 0.0 ? 1.0 : 0.0;
      continue;
    }
    const double u = abs_r[i] / h;
    if (u <= 0.001) {
      w[i] = 1.0;
    } else if (u <= 0.999) {
      const double t = 1.0 - u * u;
      w[i] = t * t;
    } else {
      w[i] = 0.0;
    }
  }
  return w;
}

std::vector<double> robust_loess(std::span<const double> values, std::size_t width, int passes) {
  auto trend = loess_smooth(values, width, 1);
  std::vector<double> residual(values.size());
  for (int pass = 0; pass < passes; ++pass) {
    for (std::size_t i = 0; i < values.size(); ++i) residual[i] = values[i] - trend[i];
    const auto rw = bisquare_weights(residual);
    trend = loess_smooth(values, width, 1, std::span<const double>(rw));
  }
  return trend;
}

}  // namespace clouddet::loess
