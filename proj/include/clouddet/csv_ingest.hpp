#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clouddet/core.hpp"

namespace clouddet::ingest {

class IngestError : public Error {
 public:
  using Error::Error;
};

struct DatasetManifest {
  std::string dataset_id;
  std::vector<std::string> centers;
  std::vector<std::string> metrics;  // sorted
  Granularity native_granularity = Granularity::hour;
  std::int64_t row_count = 0;
};

/// Binds CSV columns to fields. Column names match case-insensitively after
/// trimming.
struct SchemaMap {
  std::string timestamp = "timestamp";
  std::string center = "center";
  std::string cluster = "cluster";
  std::string node = "node";
  /// (column, metric label). Empty means every column not bound above, under
  /// its own header name.
  std::vector<std::pair<std::string, std::string>> metrics;
  /// Used when the file has no center/cluster/node columns (one file per node).
  std::optional<NodePath> fixed_node;
  /// Multiplier turning numeric timestamps into epoch seconds (0.001 for ms).
  double timestamp_scale = 1.0;
  /// Overrides the inferred sampling step.
  std::optional<Granularity> granularity;
};

struct IngestResult {
  DatasetManifest manifest;
  std::vector<MetricSeries> series;  // sorted by (node, metric)
  std::size_t skipped_rows = 0;
  std::vector<std::string> warnings;
};

/// Parses epoch seconds ("1700000000", "1.7e9") or ISO-8601
/// ("2024-01-02T03:04:05Z", "2024-01-02 03:04", with an optional +hh:mm
/// offset). Returns nullopt when the text is neither.
std::optional<std::int64_t> parse_timestamp(std::string_view text, double numeric_scale = 1.0);

/// Guesses ',' or ';' from the header line.
char detect_delimiter(std::string_view header);

/// Splits one CSV line; double quotes protect delimiters and "" is a quote.
std::vector<std::string> split_csv_line(std::string_view line, char delimiter);

/// Coarsest granularity whose step does not exceed the median spacing.
Granularity infer_granularity(std::vector<std::int64_t> timestamps);

/// Reads rows, groups them into one series per (node, metric) on the native
/// grid, sorts by time and keeps the last value of duplicate timestamps. Grid
/// points without an observation are filled by linear interpolation and
/// flagged in `missing`. Unparseable rows are skipped and counted; more than
/// 10% skipped is an IngestError.
IngestResult ingest_csv(std::istream& in, const SchemaMap& schema, std::string dataset_id);
IngestResult ingest_csv_file(const std::string& path, const SchemaMap& schema,
                             std::string dataset_id = {});

/// Anomaly labels keyed by (node_id, metric) then epoch timestamp.
struct LabelSet {
  std::map<std::pair<std::string, std::string>, std::map<std::int64_t, bool>> labels;

  /// One flag per index of the series; unlabeled points are false. Labels
  /// outside the series range raise InvalidArgument.
  std::vector<bool> for_series(const MetricSeries& series) const;
  std::size_t size() const;
};

/// Reads `node,metric,timestamp,is_anomaly` rows (header required).
LabelSet read_labels(std::istream& in);
LabelSet read_labels_file(const std::string& path);

}  // namespace clouddet::ingest
