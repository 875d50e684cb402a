#include "clouddet/store.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <set>

namespace clouddet::store {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

bool observed(const MetricSeries& s, std::size_t i) { return s.missing.size() != s.size() || !s.missing[i]; }

}  // namespace

ResampleMethod parse_resample_method(std::string_view text) {
  if (text == "mean") return ResampleMethod::mean;
  if (text == "max") return ResampleMethod::max;
  if (text == "last") return ResampleMethod::last;
  throw InvalidArgument("unknown resample method '" + std::string(text) + "'");
}

MetricSeries resample(const MetricSeries& series, Granularity target, ResampleMethod method) {
  if (static_cast<int>(target) < static_cast<int>(series.granularity)) {
    throw InvalidArgument("cannot resample " + std::string(to_string(series.granularity)) + " data to " +
                          std::string(to_string(target)));
  }
  if (target == series.granularity || series.values.empty()) {
    MetricSeries copy = series;
    copy.granularity = target;
    if (copy.missing.size() != copy.size()) copy.missing.assign(copy.size(), false);
    return copy;
  }
  const std::int64_t step = step_seconds(target);
  const std::int64_t first = floor_div(series.start_timestamp, step);
  const std::int64_t last = floor_div(series.timestamp_at(series.size() - 1), step);
  const auto buckets = static_cast<std::size_t>(last - first + 1);

  // With no observed point at all, aggregate the filled values instead.
  bool any = false;
  for (std::size_t i = 0; i < series.size() && !any; ++i) any = observed(series, i);

  std::vector<double> acc(buckets, 0.0);
  std::vector<std::size_t> count(buckets, 0);
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (any && !observed(series, i)) continue;
    const auto b = static_cast<std::size_t>(floor_div(series.timestamp_at(i), step) - first);
    const double v = series.values[i];
    switch (method) {
      case ResampleMethod::mean:
        acc[b] += v;
        break;
      case ResampleMethod::max:
        acc[b] = count[b] ? std::max(acc[b], v) : v;
        break;
      case ResampleMethod::last:
        acc[b] = v;
        break;
    }
    ++count[b];
  }

  MetricSeries out;
  out.node = series.node;
  out.metric = series.metric;
  out.granularity = target;
  out.start_timestamp = first * step;
  out.values.assign(buckets, 0.0);
  out.missing.assign(buckets, true);
  std::vector<std::size_t> filled;
  for (std::size_t b = 0; b < buckets; ++b) {
    if (!count[b]) continue;
    out.values[b] = method == ResampleMethod::mean ? acc[b] / static_cast<double>(count[b]) : acc[b];
    out.missing[b] = !any;
    filled.push_back(b);
  }
  // Interior gaps interpolate linearly; edges take the nearest value.
  for (std::size_t k = 0; k < filled.size(); ++k) {
    const std::size_t b = filled[k];
    if (k == 0) {
      for (std::size_t j = 0; j < b; ++j) out.values[j] = out.values[b];
    } else {
      const std::size_t a = filled[k - 1];
      for (std::size_t j = a + 1; j < b; ++j) {
        const double f = static_cast<double>(j - a) / static_cast<double>(b - a);
        out.values[j] = out.values[a] + f * (out.values[b] - out.values[a]);
      }
    }
    if (k + 1 == filled.size()) {
      for (std::size_t j = b + 1; j < buckets; ++j) out.values[j] = out.values[b];
    }
  }
  return out;
}

MetricSeries slice(const MetricSeries& series, const TimeRange& range) {
  MetricSeries out;
  out.node = series.node;
  out.metric = series.metric;
  out.granularity = series.granularity;
  const std::int64_t step = step_seconds(series.granularity);
  const auto n = static_cast<std::int64_t>(series.size());
  // Compare before subtracting so open-ended ranges cannot overflow.
  const std::int64_t lo = range.from <= series.start_timestamp ? 0
                          : range.from >= series.end_timestamp()
                              ? n
                              : ceil_div(range.from - series.start_timestamp, step);
  const std::int64_t hi = range.to >= series.end_timestamp() ? n
                          : range.to <= series.start_timestamp
                              ? 0
                              : ceil_div(range.to - series.start_timestamp, step);
  out.start_timestamp = series.start_timestamp + lo * step;
  if (hi <= lo) return out;
  out.values.assign(series.values.begin() + lo, series.values.begin() + hi);
  if (series.missing.size() == series.size()) {
    out.missing.assign(series.missing.begin() + lo, series.missing.begin() + hi);
  } else {
    out.missing.assign(out.values.size(), false);
  }
  return out;
}

AlignedMatrix align(const std::vector<MetricSeries>& series, std::optional<TimeRange> range) {
  if (series.empty()) throw InvalidArgument("align needs at least one series");
  const Granularity g = series.front().granularity;
  const std::int64_t step = step_seconds(g);
  std::int64_t from = series.front().start_timestamp;
  std::int64_t to = series.front().end_timestamp();
  for (const auto& s : series) {
    if (s.granularity != g) throw InvalidArgument("align needs series of one granularity");
    if (floor_div(s.start_timestamp - series.front().start_timestamp, step) * step !=
        s.start_timestamp - series.front().start_timestamp) {
      throw InvalidArgument("series grids are offset from each other");
    }
    from = std::max(from, s.start_timestamp);
    to = std::min(to, s.end_timestamp());
  }
  if (range) {
    from = std::max(from, range->from);
    to = std::min(to, range->to);
  }
  AlignedMatrix m;
  m.granularity = g;
  std::vector<std::size_t> order(series.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return series[a].metric < series[b].metric; });
  for (std::size_t i : order) {
    auto cut = slice(series[i], {from, to});
    if (cut.values.empty()) throw InvalidArgument("series ranges do not intersect");
    m.start_timestamp = cut.start_timestamp;
    m.metrics.push_back(series[i].metric);
    m.rows.push_back(std::move(cut.values));
  }
  return m;
}

std::vector<MetricSeries> query(const Dataset& dataset, const Selector& selector) {
  std::vector<MetricSeries> out;
  for (const auto& s : dataset.series) {
    if (selector.center && s.node.center_id != *selector.center) continue;
    if (selector.cluster && s.node.cluster_id != *selector.cluster) continue;
    if (selector.node && s.node.node_id != *selector.node) continue;
    if (selector.metric && s.metric != *selector.metric) continue;
    MetricSeries r = selector.granularity ? resample(s, *selector.granularity, selector.method) : s;
    if (selector.range) r = slice(r, *selector.range);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<NodePath> node_paths(const Dataset& dataset) {
  std::set<NodePath> paths;
  for (const auto& s : dataset.series) paths.insert(s.node);
  return {paths.begin(), paths.end()};
}

void Store::put(Dataset dataset) {
  if (dataset.manifest.dataset_id.empty()) throw InvalidArgument("dataset id must not be empty");
  auto ptr = std::make_shared<const Dataset>(std::move(dataset));
  std::unique_lock lock(mutex_);
  datasets_[ptr->manifest.dataset_id] = std::move(ptr);
}

bool Store::erase(const std::string& dataset_id) {
  std::unique_lock lock(mutex_);
  return datasets_.erase(dataset_id) > 0;
}

Store::DatasetPtr Store::get(const std::string& dataset_id) const {
  std::shared_lock lock(mutex_);
  const auto it = datasets_.find(dataset_id);
  return it == datasets_.end() ? nullptr : it->second;
}

std::vector<std::string> Store::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, ds] : datasets_) out.push_back(id);
  return out;
}

ingest::IngestResult Store::ingest_file(const std::string& path, const ingest::SchemaMap& schema,
                                        std::string dataset_id) {
  // Parsing happens outside the lock; only the swap is exclusive.
  auto result = ingest::ingest_csv_file(path, schema, std::move(dataset_id));
  put(Dataset{result.manifest, result.series});
  return result;
}

}  // namespace clouddet::store
