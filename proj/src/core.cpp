#include "clouddet/core.hpp"

#include <cmath>

namespace clouddet {

std::int64_t step_seconds(Granularity g) {
  switch (g) {
    case Granularity::minute:
      return 60;
    case Granularity::hour:
      return 3600;
    case Granularity::day:
      return 86400;
  }
  throw InvalidArgument("unknown granularity");
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::minute:
      return "minute";
    case Granularity::hour:
      return "hour";
    case Granularity::day:
      return "day";
  }
  return "unknown";
}

Granularity parse_granularity(std::string_view text) {
  if (text == "m" || text == "minute") return Granularity::minute;
  if (text == "h" || text == "hour") return Granularity::hour;
  if (text == "d" || text == "day") return Granularity::day;
  throw InvalidArgument("unknown granularity '" + std::string(text) + "'");
}

std::optional<Granularity> granularity_from_code(std::uint8_t code) {
  if (code > 2) return std::nullopt;
  return static_cast<Granularity>(code);
}

std::string NodePath::key() const { return center_id + "/" + cluster_id + "/" + node_id; }

std::int64_t MetricSeries::timestamp_at(std::size_t i) const {
  return start_timestamp + static_cast<std::int64_t>(i) * step_seconds(granularity);
}

std::int64_t MetricSeries::end_timestamp() const { return timestamp_at(values.size()); }

WindowSet make_windows(const std::vector<double>& values, std::size_t history) {
  if (history < 2) throw InvalidArgument("history length L must be >= 2");
  WindowSet out;
  if (values.size() < history + 1) {
    out.insufficient_history = true;
    return out;
  }
  out.windows.reserve(values.size() - history);
  for (std::size_t n = history; n < values.size(); ++n) {
    HistoryWindow w;
    w.end_index = n;
    w.length = history;
    w.data.assign(values.begin() + static_cast<std::ptrdiff_t>(n - history),
                  values.begin() + static_cast<std::ptrdiff_t>(n + 1));
    out.windows.push_back(std::move(w));
  }
  return out;
}

WindowSet make_windows(const MetricSeries& series, std::size_t history) {
  return make_windows(series.values, history);
}

int ceil_odd(double x) {
  auto v = static_cast<int>(std::ceil(x - 1e-12));
  if (v % 2 == 0) ++v;
  return v;
}

}  // namespace clouddet
