#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace clouddet {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

enum class Granularity : std::uint8_t { minute = 0, hour = 1, day = 2 };

/// Sampling step in seconds.
std::int64_t step_seconds(Granularity g);
std::string_view to_string(Granularity g);
/// Accepts "minute"/"hour"/"day" and the one-letter forms "m"/"h"/"d".
Granularity parse_granularity(std::string_view text);
std::optional<Granularity> granularity_from_code(std::uint8_t code);

/// Location of a compute node in the center / cluster / node hierarchy.
struct NodePath {
  std::string center_id;
  std::string cluster_id;
  std::string node_id;

  bool valid() const { return !center_id.empty() && !cluster_id.empty() && !node_id.empty(); }
  /// "center/cluster/node"
  std::string key() const;

  auto operator<=>(const NodePath&) const = default;
  bool operator==(const NodePath&) const = default;
};

/// One metric of one node, sampled at a fixed granularity. Timestamps are
/// implied: start_timestamp + i * step_seconds(granularity).
struct MetricSeries {
  NodePath node;
  std::string metric;
  Granularity granularity = Granularity::hour;
  std::int64_t start_timestamp = 0;
  std::vector<double> values;
  /// missing[i] is true when values[i] was filled in rather than observed.
  std::vector<bool> missing;

  std::size_t size() const { return values.size(); }
  std::int64_t timestamp_at(std::size_t i) const;
  /// One past the last timestamp covered.
  std::int64_t end_timestamp() const;
};

/// The L+1 most recent points d_{n-L} .. d_n ending at index n.
struct HistoryWindow {
  std::size_t end_index = 0;
  std::size_t length = 0;  // L
  std::vector<double> data;

  std::size_t size() const { return data.size(); }
};

struct ScoreRecord {
  NodePath node;
  std::string metric;
  std::int64_t timestamp_index = 0;
  double periodic = 0.0;
  double trend = 0.0;
  double spike = 0.0;
  double aggregated = 0.0;
  bool warmup = false;
};

struct WindowSet {
  std::vector<HistoryWindow> windows;
  /// Set when the series holds fewer than L+1 points.
  bool insufficient_history = false;
};

/// Slides a window of L+1 points over the series, one window per n in [L, len-1].
WindowSet make_windows(const MetricSeries& series, std::size_t history);
WindowSet make_windows(const std::vector<double>& values, std::size_t history);

/// Smallest odd integer >= x.
int ceil_odd(double x);

}  // namespace clouddet
