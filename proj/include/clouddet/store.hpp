#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "clouddet/core.hpp"
#include "clouddet/csv_ingest.hpp"

namespace clouddet::store {

enum class ResampleMethod { mean, max, last };
ResampleMethod parse_resample_method(std::string_view text);

/// Buckets the series onto the coarser `target` grid. Only observed points
/// (missing == false) are aggregated; buckets without any are interpolated
/// from their neighbours (nearest value at the edges) and flagged missing.
MetricSeries resample(const MetricSeries& series, Granularity target,
                      ResampleMethod method = ResampleMethod::mean);

/// Half-open epoch-second range.
struct TimeRange {
  std::int64_t from = 0;
  std::int64_t to = 0;
};

struct AlignedMatrix {
  std::vector<std::string> metrics;  // row labels, ascending
  std::vector<std::vector<double>> rows;
  Granularity granularity = Granularity::hour;
  std::int64_t start_timestamp = 0;

  std::size_t columns() const { return rows.empty() ? 0 : rows.front().size(); }
};

/// Cuts every series to the common covered range (further limited by `range`)
/// and stacks them by metric label. Series must share a granularity.
AlignedMatrix align(const std::vector<MetricSeries>& series, std::optional<TimeRange> range = std::nullopt);

/// Restricts a series to the grid points inside `range`; may return empty.
MetricSeries slice(const MetricSeries& series, const TimeRange& range);

struct Dataset {
  ingest::DatasetManifest manifest;
  std::vector<MetricSeries> series;
};

struct Selector {
  std::optional<std::string> center;
  std::optional<std::string> cluster;
  std::optional<std::string> node;
  std::optional<std::string> metric;
  std::optional<TimeRange> range;
  std::optional<Granularity> granularity;  // native when absent
  ResampleMethod method = ResampleMethod::mean;
};

/// Series of `dataset` matching every set field of the selector, resampled
/// to the requested granularity. Unknown ids give an empty result.
std::vector<MetricSeries> query(const Dataset& dataset, const Selector& selector);

/// Every distinct node path in the dataset, sorted.
std::vector<NodePath> node_paths(const Dataset& dataset);

/// In-memory datasets by id. Readers get an immutable snapshot; a writer
/// swaps in a complete new dataset, so a reader never sees a partial one.
class Store {
 public:
  using DatasetPtr = std::shared_ptr<const Dataset>;

  void put(Dataset dataset);
  bool erase(const std::string& dataset_id);
  DatasetPtr get(const std::string& dataset_id) const;
  std::vector<std::string> ids() const;

  /// Ingests a CSV and publishes it under the manifest's id.
  ingest::IngestResult ingest_file(const std::string& path, const ingest::SchemaMap& schema,
                                   std::string dataset_id = {});

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, DatasetPtr> datasets_;
};

}  // namespace clouddet::store
