#include <doctest.h>

#include <numeric>

#include "clouddet/core.hpp"

using namespace clouddet;

namespace {

MetricSeries ramp_series(std::size_t n) {
  MetricSeries s;
  s.node = {"c1", "k1", "n1"};
  s.metric = "cpu_avg";
  s.values.resize(n);
  std::iota(s.values.begin(), s.values.end(), 0.0);
  s.missing.assign(n, false);
  return s;
}

}  // namespace

TEST_CASE("make_windows counts one window per index from L to len-1") {
  const auto set = make_windows(ramp_series(10), 5);
  REQUIRE(set.windows.size() == 5);
  CHECK_FALSE(set.insufficient_history);
  for (std::size_t i = 0; i < set.windows.size(); ++i) {
    CHECK(set.windows[i].end_index == 5 + i);
    CHECK(set.windows[i].size() == 6);
  }
}

TEST_CASE("make_windows on a series of exactly L points is empty with warmup marker") {
  const auto set = make_windows(ramp_series(5), 5);
  CHECK(set.windows.empty());
  CHECK(set.insufficient_history);
}

TEST_CASE("make_windows on a 1427-point series with L=50") {
  CHECK(make_windows(ramp_series(1427), 50).windows.size() == 1377);
}

TEST_CASE("windows are exact slices and consecutive windows share L points") {
  const auto s = ramp_series(40);
  const std::size_t L = 7;
  const auto set = make_windows(s, L);
  for (const auto& w : set.windows) {
    for (std::size_t j = 0; j < w.size(); ++j) CHECK(w.data[j] == s.values[w.end_index - L + j]);
  }
  for (std::size_t i = 1; i < set.windows.size(); ++i) {
    const auto& a = set.windows[i - 1].data;
    const auto& b = set.windows[i].data;
    CHECK(std::equal(a.begin() + 1, a.end(), b.begin(), b.begin() + static_cast<long>(L)));
  }
}

TEST_CASE("make_windows rejects L < 2") { CHECK_THROWS_AS(make_windows(ramp_series(10), 1), InvalidArgument); }

TEST_CASE("granularity parsing and steps") {
  CHECK(parse_granularity("m") == Granularity::minute);
  CHECK(parse_granularity("hour") == Granularity::hour);
  CHECK(parse_granularity("d") == Granularity::day);
  CHECK_THROWS_AS(parse_granularity("week"), InvalidArgument);
  CHECK(step_seconds(Granularity::hour) == 3600);
  CHECK_FALSE(granularity_from_code(3).has_value());
}

TEST_CASE("ceil_odd") {
  CHECK(ceil_odd(1.67 * 24) == 41);
  CHECK(ceil_odd(1.67 * 7) == 13);
  CHECK(ceil_odd(1.67 * 2) == 5);
  CHECK(ceil_odd(24) == 25);
  CHECK(ceil_odd(7) == 7);
}

TEST_CASE("series timestamps derive from start and step") {
  auto s = ramp_series(3);
  s.start_timestamp = 1000;
  s.granularity = Granularity::minute;
  CHECK(s.timestamp_at(2) == 1120);
  CHECK(s.end_timestamp() == 1180);
}
