#include <doctest.h>

#include <numeric>
#include <random>

#include "clouddet/loess.hpp"
#include "clouddet/stl.hpp"
#include "oracles.hpp"

using namespace clouddet;
using clouddet::loess::loess_smooth;

namespace {

double variance(const std::vector<double>& v) {
  const auto c = oracle::centered(v);
  double s = 0.0;
  for (double x : c) s += x * x;
  return s / static_cast<double>(v.size());
}

std::vector<double> noisy(std::vector<double> v, double sd, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sd);
  for (auto& x : v) x += dist(rng);
  return v;
}

stl::StlParams params_for(int period) {
  periodicity::PeriodEstimate est;
  est.period = period;
  est.validated = true;
  return *stl::default_stl_params(est, Granularity::hour);
}

}  // namespace

TEST_CASE("loess degree 1 reproduces a line for any width") {
  std::vector<double> ramp(25);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 3.0 - 0.5 * static_cast<double>(i);
  for (std::size_t width : {3u, 7u, 25u, 41u, 99u}) {
    const auto out = loess_smooth(ramp, width, 1);
    for (std::size_t i = 0; i < ramp.size(); ++i) CHECK(out[i] == doctest::Approx(ramp[i]).epsilon(1e-10));
  }
}

TEST_CASE("loess keeps constants") {
  const std::vector<double> c(11, -2.5);
  for (int degree : {0, 1}) {
    const auto out = loess_smooth(c, 5, degree);
    for (double v : out) CHECK(v == doctest::Approx(-2.5));
  }
}

TEST_CASE("loess smooths a noisy sine") {
  const auto x = noisy(oracle::sine(120, 30.0), 0.5, 3);
  CHECK(variance(loess_smooth(x, 7, 1)) < variance(x));
}

TEST_CASE("loess rejects bad arguments") {
  const std::vector<double> x(10, 1.0);
  CHECK_THROWS_AS(loess_smooth(x, 4, 1), InvalidArgument);
  CHECK_THROWS_AS(loess_smooth(x, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(loess_smooth(x, 5, 2), InvalidArgument);
  const std::vector<double> short_w(3, 1.0);
  CHECK_THROWS_AS(loess_smooth(x, 5, 1, std::span<const double>(short_w)), InvalidArgument);
  std::vector<double> neg(10, 1.0);
  neg[3] = -0.1;
  CHECK_THROWS_AS(loess_smooth(x, 5, 1, std::span<const double>(neg)), InvalidArgument);
}

TEST_CASE("robustness weights remove an outlier's pull") {
  std::vector<double> x(21, 1.0);
  x[10] = 50.0;
  std::vector<double> w(21, 1.0);
  w[10] = 0.0;
  const auto out = loess_smooth(x, 7, 1, std::span<const double>(w));
  CHECK(out[10] == doctest::Approx(1.0));
  CHECK(out[9] == doctest::Approx(1.0));
}

TEST_CASE("default STL parameters") {
  const auto p24 = params_for(24);
  CHECK(p24.n_p == 24);
  CHECK(p24.n_i == 1);
  CHECK(p24.n_o == 5);
  CHECK(p24.n_s == 15);
  CHECK(p24.n_t == 41);
  CHECK(p24.n_l == 25);
  const auto p7 = params_for(7);
  CHECK(p7.n_p == 7);
  CHECK(p7.n_t == 13);
  CHECK(p7.n_l == 7);
  const auto p2 = params_for(2);
  CHECK(p2.n_p == 2);
  CHECK(p2.n_t == 5);
  CHECK(p2.n_l == 3);
  CHECK_FALSE(stl::default_stl_params(periodicity::PeriodEstimate{}, Granularity::day));
}

TEST_CASE("STL of a pure sine: flat trend, seasonal follows the sine") {
  const int period = 24;
  const auto x = oracle::sine(4 * period, period, 2.0);
  const auto parts = stl::stl_decompose(x, params_for(period));
  double max_trend = 0.0;
  double max_season_err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    max_trend = std::max(max_trend, std::abs(parts.trend[i]));
    max_season_err = std::max(max_season_err, std::abs(parts.seasonal[i] - x[i]));
  }
  CHECK(max_trend < 0.1 * 2.0);
  CHECK(max_season_err < 0.1 * 2.0);
}

TEST_CASE("STL trend slope tracks a ramp under a seasonal pattern") {
  const int period = 12;
  const double slope = 0.25;
  auto x = oracle::sine(6 * period, period, 3.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += slope * static_cast<double>(i);
  const auto parts = stl::stl_decompose(x, params_for(period));
  CHECK(oracle::ols_slope(parts.trend) == doctest::Approx(slope).epsilon(0.05));
}

TEST_CASE("STL additive identity is exact") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(60);
    for (auto& v : x) v = u(rng);
    const auto parts = stl::stl_decompose(x, params_for(2 + trial % 20));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double base = parts.seasonal[i] + parts.trend[i];
      if (base == 0.0 || std::ilogb(base) <= std::ilogb(x[i])) {
        CHECK(base + parts.residual[i] == x[i]);
      } else {
        // S + T sits in a higher binade than x[i], so the sum cannot land on x[i]'s last bit.
        CHECK(std::abs(x[i] - (base + parts.residual[i])) <= 1e-15 * std::abs(base) * 4);
      }
    }
  }
}

TEST_CASE("STL additive identity on metric-like levels") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double level = std::pow(10.0, 12.0 * u(rng) - 6.0);
    std::vector<double> x(72);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = level * (1.0 + 0.3 * std::sin(static_cast<double>(i)) + 0.2 * u(rng));
      if (u(rng) < 0.03) x[i] *= 1.8;
    }
    const auto parts = stl::stl_decompose(x, params_for(6 + trial % 12));
    for (std::size_t i = 0; i < x.size(); ++i) {
      REQUIRE(parts.seasonal[i] + parts.trend[i] + parts.residual[i] == x[i]);
    }
  }
}

TEST_CASE("STL needs two cycles") {
  CHECK_THROWS_AS(stl::stl_decompose(oracle::sine(47, 24.0), params_for(24)), stl::InsufficientCycles);
  CHECK_NOTHROW(stl::stl_decompose(oracle::sine(48, 24.0), params_for(24)));
}

TEST_CASE("STL shift by a constant moves only the trend") {
  const int period = 12;
  const auto x = noisy(oracle::sine(60, period, 1.5), 0.3, 5);
  auto shifted = x;
  for (auto& v : shifted) v += 42.0;
  const auto a = stl::stl_decompose(x, params_for(period));
  const auto b = stl::stl_decompose(shifted, params_for(period));
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(b.trend[i] - a.trend[i] == doctest::Approx(42.0).epsilon(1e-6));
    CHECK(std::abs(b.seasonal[i] - a.seasonal[i]) <= 1e-6);
    CHECK(std::abs(b.residual[i] - a.residual[i]) <= 1e-6);
  }
}

namespace {

double redecomposition_ratio(const std::vector<double>& x, int period) {
  const auto a = stl::stl_decompose(x, params_for(period));
  std::vector<double> smooth(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) smooth[i] = a.seasonal[i] + a.trend[i];
  const auto b = stl::stl_decompose(smooth, params_for(period));
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  double max_r = 0.0;
  for (double r : b.residual) max_r = std::max(max_r, std::abs(r));
  return max_r / (*hi - *lo);
}

}  // namespace

TEST_CASE("STL re-decomposition of seasonal+trend leaves a small residual") {
  for (int period : {7, 12, 24}) {
    for (int cycles : {2, 4, 10}) {
      auto x = oracle::sine(static_cast<std::size_t>(cycles * period), period, 2.0);
      for (auto& v : x) v += 5.0;
      CHECK(redecomposition_ratio(x, period) <= 1e-6);
    }
    // With a trend the boundary extrapolation needs enough cycles to settle.
    auto x = oracle::sine(static_cast<std::size_t>(10 * period), period, 2.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.05 * static_cast<double>(i);
    CHECK(redecomposition_ratio(x, period) <= 1e-6);
  }
}
