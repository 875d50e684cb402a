#include "clouddet/csv_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>

namespace clouddet::ingest {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <typename T>
bool read_int(std::string_view s, std::size_t pos, std::size_t len, T& out) {
  if (pos + len > s.size()) return false;
  const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc{} && ptr == s.data() + pos + len;
}

std::optional<std::int64_t> parse_iso(std::string_view s) {
  int y = 0;
  unsigned mo = 0, d = 0;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t secs = std::chrono::sys_days{ymd}.time_since_epoch() / std::chrono::seconds{1};
  std::size_t pos = 10;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    int h = 0, mi = 0, se = 0;
    if (!read_int(s, pos + 1, 2, h) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !read_int(s, pos + 4, 2, mi)) {
      return std::nullopt;
    }
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
      if (!read_int(s, pos + 1, 2, se)) return std::nullopt;
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {  // fractional seconds are dropped
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      }
    }
    if (h > 23 || mi > 59 || se > 60) return std::nullopt;
    secs += h * 3600 + mi * 60 + se;
  }
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) return secs;
    if (s[pos] != '+' && s[pos] != '-') return std::nullopt;
    const int sign = s[pos] == '+' ? 1 : -1;
    int oh = 0, om = 0;
    if (!read_int(s, pos + 1, 2, oh)) return std::nullopt;
    std::size_t next = pos + 3;
    if (next < s.size() && s[next] == ':') ++next;
    if (next < s.size() && !read_int(s, next, 2, om)) return std::nullopt;
    if (next < s.size() && next + 2 != s.size()) return std::nullopt;
    secs -= sign * (oh * 3600 + om * 60);
  }
  return secs;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

struct Observation {
  std::int64_t timestamp;
  double value;
};

/// Series on the grid [first bucket, last bucket] with interior gaps filled.
MetricSeries build_series(const NodePath& node, const std::string& metric, std::vector<Observation> obs,
                          Granularity g) {
  const std::int64_t step = step_seconds(g);
  std::stable_sort(obs.begin(), obs.end(),
                   [](const Observation& a, const Observation& b) { return a.timestamp < b.timestamp; });
  // Snap to the grid; the last row of a bucket wins.
  std::vector<Observation> snapped;
  for (const auto& o : obs) {
    const std::int64_t t = floor_div(o.timestamp, step) * step;
    if (!snapped.empty() && snapped.back().timestamp == t) {
      snapped.back().value = o.value;
    } else {
      snapped.push_back({t, o.value});
    }
  }
  MetricSeries s;
  s.node = node;
  s.metric = metric;
  s.granularity = g;
  s.start_timestamp = snapped.front().timestamp;
  const auto n = static_cast<std::size_t>((snapped.back().timestamp - s.start_timestamp) / step) + 1;
  s.values.assign(n, 0.0);
  s.missing.assign(n, true);
  for (std::size_t k = 0; k < snapped.size(); ++k) {
    const auto i = static_cast<std::size_t>((snapped[k].timestamp - s.start_timestamp) / step);
    s.values[i] = snapped[k].value;
    s.missing[i] = false;
    if (k == 0) continue;
    const auto prev = static_cast<std::size_t>((snapped[k - 1].timestamp - s.start_timestamp) / step);
    for (std::size_t j = prev + 1; j < i; ++j) {
      const double f = static_cast<double>(j - prev) / static_cast<double>(i - prev);
      s.values[j] = snapped[k - 1].value + f * (snapped[k].value - snapped[k - 1].value);
    }
  }
  return s;
}

Granularity granularity_for_gaps(std::vector<std::int64_t> gaps) {
  if (gaps.empty()) return Granularity::hour;
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  const std::int64_t median = gaps[gaps.size() / 2];
  if (median >= step_seconds(Granularity::day)) return Granularity::day;
  if (median >= step_seconds(Granularity::hour)) return Granularity::hour;
  return Granularity::minute;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text, double numeric_scale) {
  text = trim(text);
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = text.substr(1, text.size() - 2);
  if (text.empty()) return std::nullopt;
  if (text.size() >= 10 && text[4] == '-') return parse_iso(text);
  const auto v = parse_double(text);
  if (!v) return std::nullopt;
  const double secs = *v * numeric_scale;
  if (std::abs(secs) > 1e15) return std::nullopt;
  return static_cast<std::int64_t>(std::floor(secs));
}

char detect_delimiter(std::string_view header) {
  const auto commas = std::count(header.begin(), header.end(), ',');
  const auto semis = std::count(header.begin(), header.end(), ';');
  return semis > commas ? ';' : ',';
}

std::vector<std::string> split_csv_line(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

Granularity infer_granularity(std::vector<std::int64_t> timestamps) {
  std::sort(timestamps.begin(), timestamps.end());
  timestamps.erase(std::unique(timestamps.begin(), timestamps.end()), timestamps.end());
  std::vector<std::int64_t> gaps;
  for (std::size_t i = 1; i < timestamps.size(); ++i) gaps.push_back(timestamps[i] - timestamps[i - 1]);
  return granularity_for_gaps(std::move(gaps));
}

IngestResult ingest_csv(std::istream& in, const SchemaMap& schema, std::string dataset_id) {
  std::string line;
  while (std::getline(in, line) && trim(line).empty()) {
  }
  if (trim(line).empty()) throw IngestError("CSV has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const char delim = detect_delimiter(line);
  const auto header = split_csv_line(line, delim);

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index.emplace(lower(header[i]), i);
  const auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = index.find(lower(trim(name)));
    if (it == index.end()) return std::nullopt;
    return it->second;
  };

  const auto ts_col = find(schema.timestamp);
  if (!ts_col) throw IngestError("timestamp column '" + schema.timestamp + "' not found");
  std::optional<std::size_t> center_col, cluster_col, node_col;
  if (!schema.fixed_node) {
    center_col = find(schema.center);
    cluster_col = find(schema.cluster);
    node_col = find(schema.node);
    if (!center_col || !cluster_col || !node_col) {
      throw IngestError("center, cluster and node columns are required without a fixed node");
    }
  } else if (!schema.fixed_node->valid()) {
    throw IngestError("fixed node path has an empty component");
  }

  std::vector<std::pair<std::size_t, std::string>> metric_cols;
  if (schema.metrics.empty()) {
    std::set<std::size_t> bound{*ts_col};
    for (const auto& c : {center_col, cluster_col, node_col})
      if (c) bound.insert(*c);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (!bound.count(i)) metric_cols.emplace_back(i, header[i]);
    }
  } else {
    for (const auto& [column, label] : schema.metrics) {
      const auto c = find(column);
      if (!c) throw IngestError("metric column '" + column + "' not found");
      metric_cols.emplace_back(*c, label.empty() ? column : label);
    }
  }
  if (metric_cols.empty()) throw IngestError("no metric columns");
  {
    std::set<std::string> labels;
    for (const auto& mc : metric_cols) {
      if (mc.second.empty() || !labels.insert(mc.second).second) {
        throw IngestError("metric labels must be unique and non-empty");
      }
    }
  }

  std::map<std::pair<NodePath, std::string>, std::vector<Observation>> grouped;
  std::size_t rows = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++rows;
    const auto cells = split_csv_line(line, delim);
    const auto skip = [&](const std::string& why) {
      ++skipped;
      if (warnings.size() < 20) warnings.push_back("line " + std::to_string(line_no) + ": " + why);
    };
    if (cells.size() != header.size()) {
      skip("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
      continue;
    }
    const auto ts = parse_timestamp(cells[*ts_col], schema.timestamp_scale);
    if (!ts) {
      skip("bad timestamp '" + cells[*ts_col] + "'");
      continue;
    }
    NodePath node = schema.fixed_node ? *schema.fixed_node
                                      : NodePath{cells[*center_col], cells[*cluster_col], cells[*node_col]};
    if (!node.valid()) {
      skip("empty node path");
      continue;
    }
    std::vector<std::pair<const std::string*, double>> values;
    bool bad = false;
    for (const auto& [col, label] : metric_cols) {
      if (trim(cells[col]).empty()) continue;  // no observation for this metric
      const auto v = parse_double(cells[col]);
      if (!v) {
        skip("bad value '" + cells[col] + "' for " + label);
        bad = true;
        break;
      }
      values.emplace_back(&label, *v);
    }
    if (bad) continue;
    for (const auto& [label, v] : values) grouped[{node, *label}].push_back({*ts, v});
  }
  if (rows == 0) throw IngestError("CSV has no data rows");
  if (skipped * 10 > rows) {
    throw IngestError(std::to_string(skipped) + " of " + std::to_string(rows) +
                      " rows could not be parsed (limit 10%)");
  }
  if (grouped.empty()) throw IngestError("CSV has no metric values");

  IngestResult result;
  result.skipped_rows = skipped;
  result.warnings = std::move(warnings);
  if (skipped) result.warnings.push_back("skipped " + std::to_string(skipped) + " unparseable rows");

  Granularity g = schema.granularity.value_or(Granularity::hour);
  if (!schema.granularity) {
    // Spacing within each series, so interleaved nodes do not shrink the step.
    std::vector<std::int64_t> gaps;
    for (const auto& [key, obs] : grouped) {
      std::vector<std::int64_t> ts;
      for (const auto& o : obs) ts.push_back(o.timestamp);
      std::sort(ts.begin(), ts.end());
      ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
      for (std::size_t i = 1; i < ts.size(); ++i) gaps.push_back(ts[i] - ts[i - 1]);
    }
    g = granularity_for_gaps(std::move(gaps));
  }

  std::size_t unsorted = 0;
  std::set<std::string> centers;
  std::set<std::string> metrics;
  for (auto& [key, obs] : grouped) {
    if (!std::is_sorted(obs.begin(), obs.end(),
                        [](const Observation& a, const Observation& b) { return a.timestamp < b.timestamp; })) {
      ++unsorted;
    }
    result.series.push_back(build_series(key.first, key.second, std::move(obs), g));
    centers.insert(key.first.center_id);
    metrics.insert(key.second);
  }
  if (unsorted) result.warnings.push_back(std::to_string(unsorted) + " series had out-of-order timestamps");

  result.manifest.dataset_id = std::move(dataset_id);
  result.manifest.centers.assign(centers.begin(), centers.end());
  result.manifest.metrics.assign(metrics.begin(), metrics.end());
  result.manifest.native_granularity = g;
  result.manifest.row_count = static_cast<std::int64_t>(rows - skipped);
  return result;
}

IngestResult ingest_csv_file(const std::string& path, const SchemaMap& schema, std::string dataset_id) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path + "'");
  if (dataset_id.empty()) {
    const auto slash = path.find_last_of('/');
    dataset_id = path.substr(slash == std::string::npos ? 0 : slash + 1);
    const auto dot = dataset_id.find_last_of('.');
    if (dot != std::string::npos && dot > 0) dataset_id.erase(dot);
  }
  return ingest_csv(in, schema, std::move(dataset_id));
}

std::vector<bool> LabelSet::for_series(const MetricSeries& series) const {
  std::vector<bool> out(series.size(), false);
  auto it = labels.find({series.node.node_id, series.metric});
  if (it == labels.end()) it = labels.find({series.node.key(), series.metric});
  if (it == labels.end()) return out;
  const std::int64_t step = step_seconds(series.granularity);
  for (const auto& [ts, flag] : it->second) {
    const std::int64_t i = floor_div(ts - series.start_timestamp, step);
    if (i < 0 || i >= static_cast<std::int64_t>(series.size())) {
      throw InvalidArgument("label timestamp " + std::to_string(ts) + " is outside series " +
                            series.node.key() + ":" + series.metric);
    }
    if (flag) out[static_cast<std::size_t>(i)] = true;
  }
  return out;
}

std::size_t LabelSet::size() const {
  std::size_t n = 0;
  for (const auto& [key, m] : labels) n += m.size();
  return n;
}

LabelSet read_labels(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("label CSV is empty");
  const char delim = detect_delimiter(line);
  const auto header = split_csv_line(line, delim);
  const std::vector<std::string> expect{"node", "metric", "timestamp", "is_anomaly"};
  if (header.size() != 4) throw IngestError("label CSV header must be node,metric,timestamp,is_anomaly");
  for (std::size_t i = 0; i < 4; ++i) {
    if (lower(header[i]) != expect[i]) throw IngestError("label CSV header must be node,metric,timestamp,is_anomaly");
  }
  LabelSet set;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line, delim);
    const auto ts = cells.size() == 4 ? parse_timestamp(cells[2]) : std::nullopt;
    if (!ts || (cells[3] != "0" && cells[3] != "1") || cells[0].empty() || cells[1].empty()) {
      throw IngestError("label CSV line " + std::to_string(line_no) + " is malformed");
    }
    set.labels[{cells[0], cells[1]}][*ts] = cells[3] == "1";
  }
  return set;
}

LabelSet read_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path + "'");
  return read_labels(in);
}

}  // namespace clouddet::ingest
