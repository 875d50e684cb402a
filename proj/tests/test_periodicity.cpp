#include <doctest.h>

#include <random>

#include "clouddet/periodicity.hpp"
#include "oracles.hpp"

using namespace clouddet;
using namespace clouddet::periodicity;

namespace {

std::size_t argmax_from(const std::vector<double>& p, std::size_t from, std::size_t to) {
  std::size_t best = from;
  for (std::size_t k = from; k <= to; ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

std::vector<double> white_noise(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("periodogram of a constant window is all zero after centring") {
  const std::vector<double> c(32, 4.5);
  const auto s = periodogram(c);
  REQUIRE(s.powers.size() == 17);
  for (double p : s.powers) CHECK(p == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("periodogram matches the direct DFT") {
  const auto x = oracle::sine(64, 16.0);
  const auto ref = oracle::dft_power(x);
  const auto s = periodogram(x);
  REQUIRE(s.powers.size() == 33);
  for (std::size_t k = 0; k < s.powers.size(); ++k) {
    CHECK(s.powers[k] == doctest::Approx(ref[k]).epsilon(1e-9).scale(1.0));
    CHECK(std::norm(s.dft[k]) == doctest::Approx(s.powers[k]));
  }
  CHECK(argmax_from(ref, 1, 32) == 4);
  CHECK(argmax_from(s.powers, 1, 32) == 4);
}

TEST_CASE("two-tone periodogram peaks at k=8 and k=2") {
  auto x = oracle::sine(64, 8.0);
  const auto slow = oracle::sine(64, 32.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += slow[i];
  const auto ref = oracle::dft_power(x);
  const auto s = periodogram(x);
  std::vector<std::size_t> order(33);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.powers[a] > s.powers[b]; });
  std::vector<std::size_t> top{order[0], order[1]};
  std::sort(top.begin(), top.end());
  CHECK(top == std::vector<std::size_t>{2, 8});
  CHECK(s.powers[2] == doctest::Approx(ref[2]));
  CHECK(s.powers[8] == doctest::Approx(ref[8]));
}

TEST_CASE("periodogram rejects windows shorter than 4") {
  CHECK_THROWS_AS(periodogram(std::vector<double>{1, 2, 3}), InvalidArgument);
  CHECK_THROWS_AS(autocorrelation(std::vector<double>{1, 2, 3}), InvalidArgument);
}

TEST_CASE("Parseval holds for odd and even lengths") {
  for (std::size_t n : {31u, 64u, 97u, 168u}) {
    const auto x = white_noise(n, static_cast<unsigned>(n));
    const auto c = oracle::centered(x);
    double energy = 0.0;
    for (double v : c) energy += v * v;
    const auto s = periodogram(x);
    CHECK(total_power(s) == doctest::Approx(static_cast<double>(n) * energy).epsilon(1e-6));
  }
}

TEST_CASE("ACF matches brute-force lagged products") {
  const auto x = oracle::sine(168, 24.0);
  const auto ref = oracle::acf(x, 84);
  const auto a = autocorrelation(x);
  REQUIRE(a);
  REQUIRE(a->values.size() == 85);
  for (std::size_t t = 0; t < ref.size(); ++t) CHECK(a->values[t] == doctest::Approx(ref[t]));
  CHECK(a->values[0] == doctest::Approx(1.0));
  const auto hills = acf_hills(*a);
  CHECK(std::find(hills.begin(), hills.end(), 24u) != hills.end());
  CHECK(ref[24] > ref[23]);
  CHECK(ref[24] > ref[25]);
}

TEST_CASE("ACF of white noise stays small and nothing validates") {
  const auto x = white_noise(168, 7);
  const auto ref = oracle::acf(x, 84);
  for (std::size_t t = 2; t < ref.size(); ++t) CHECK(std::abs(ref[t]) < 0.3);
  const auto a = autocorrelation(x);
  REQUIRE(a);
  for (std::size_t t = 0; t < ref.size(); ++t) CHECK(a->values[t] == doctest::Approx(ref[t]));
  CHECK_FALSE(detect_period(x).present());
}

TEST_CASE("ACF of a constant window is undefined") {
  CHECK_FALSE(autocorrelation(std::vector<double>(20, 3.0)).has_value());
}

TEST_CASE("plateau hills resolve to the smallest lag") {
  AcfSeries a{{1.0, 0.2, 0.5, 0.5, 0.1, 0.3, 0.0}};
  CHECK(acf_hills(a) == std::vector<std::size_t>{2, 5});
}

TEST_CASE("detect_period recovers period 24 from a 168-sample sine") {
  const auto x = oracle::sine(168, 24.0);
  const auto ref = oracle::acf(x, 84);
  const auto spectral_k = argmax_from(oracle::dft_power(x), 2, 84);
  const double candidate = 168.0 / static_cast<double>(spectral_k);
  const auto expected =
      oracle::acf_argmax(ref, static_cast<std::size_t>(candidate - 3), static_cast<std::size_t>(candidate + 3));
  CHECK(expected == 24);
  const auto est = detect_period(x);
  REQUIRE(est.present());
  CHECK(est.validated);
  CHECK(std::abs(*est.period - static_cast<double>(expected)) <= 1.0);
  CHECK(est.candidate_k == 7);
}

TEST_CASE("detect_period is absent for constants, ramps and short windows") {
  CHECK_FALSE(detect_period(std::vector<double>(64, 1.0)).present());
  std::vector<double> ramp(96);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  const auto ref = oracle::acf(ramp, 48);
  for (std::size_t t = 1; t < ref.size(); ++t) CHECK(ref[t] < ref[t - 1]);
  CHECK_FALSE(detect_period(ramp).present());
  CHECK_FALSE(detect_period(std::vector<double>{1, 2, 1, 2, 1, 2, 1}).present());
}

TEST_CASE("detect_period is invariant to positive scale and constant shift") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    auto x = oracle::sine(96, 12.0, 2.0, 0.3 * seed);
    const auto noise = white_noise(96, seed);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.4 * noise[i];
    const auto base = detect_period(x);
    for (double c : {0.01, 3.0, 1000.0}) {
      std::vector<double> scaled(x);
      for (auto& v : scaled) v *= c;
      CHECK(detect_period(scaled).period == base.period);
    }
    std::vector<double> shifted(x);
    for (auto& v : shifted) v += 17.0;
    CHECK(detect_period(shifted).period == base.period);
  }
}
