#include "clouddet/service.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <httplib.h>

#include "clouddet/embedding.hpp"
#include "clouddet/kde.hpp"
#include "clouddet/lof.hpp"
#include "clouddet/projection.hpp"
#include "clouddet/ranking.hpp"

namespace clouddet::service {

namespace {

/// Raised by handlers; carries the HTTP status and error code.
struct ApiError : Error {
  ApiError(int s, std::string c, const std::string& message) : Error(message), status(s), code(std::move(c)) {}
  int status;
  std::string code;
};

ApiError bad_request(const std::string& message) { return {400, "invalid_argument", message}; }

Json error_body(const std::string& code, const std::string& message) {
  return Json{{"code", code}, {"message", message}};
}

/// JSON has no NaN or infinity; such values are emitted as null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename F>
ApiResponse guarded(F&& f) {
  try {
    return f();
  } catch (const ApiError& e) {
    return {e.status, error_body(e.code, e.what())};
  } catch (const InvalidArgument& e) {
    return {400, error_body("invalid_argument", e.what())};
  } catch (const std::exception& e) {
    return {500, error_body("internal", e.what())};
  }
}

std::optional<std::string> param(const Query& q, const std::string& key) {
  const auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::int64_t int_param(const Query& q, const std::string& key, std::int64_t fallback, std::int64_t min) {
  const auto v = param(q, key);
  if (!v) return fallback;
  std::size_t used = 0;
  std::int64_t out = 0;
  try {
    out = std::stoll(*v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v->size()) throw bad_request("'" + key + "' must be an integer");
  if (out < min) throw bad_request("'" + key + "' must be >= " + std::to_string(min));
  return out;
}

double real_param(const Query& q, const std::string& key, double fallback) {
  const auto v = param(q, key);
  if (!v) return fallback;
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(*v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v->size() || std::isnan(out)) throw bad_request("'" + key + "' must be a number");
  return out;
}

/// Half-open [from, to) in epoch seconds; either end may be open.
struct Range {
  std::int64_t from = std::numeric_limits<std::int64_t>::min();
  std::int64_t to = std::numeric_limits<std::int64_t>::max();
  bool contains(std::int64_t t) const { return t >= from && t < to; }
};

Range range_param(const Query& q) {
  Range r;
  for (const auto& [key, slot] : {std::pair{"from", &r.from}, std::pair{"to", &r.to}}) {
    if (const auto v = param(q, key)) {
      const auto t = ingest::parse_timestamp(*v);
      if (!t) throw bad_request(std::string("'") + key + "' is not a timestamp");
      *slot = *t;
    }
  }
  if (r.from >= r.to) throw bad_request("empty time range");
  return r;
}

Json node_json(const NodePath& p) {
  return Json{{"center", p.center_id}, {"cluster", p.cluster_id}, {"node", p.node_id}, {"key", p.key()}};
}

std::vector<ScoreRecord> records_in(const JobResult& r, const Range& range) {
  const std::int64_t step = step_seconds(r.granularity);
  std::vector<ScoreRecord> out;
  for (const auto& rec : r.records) {
    if (range.contains(rec.timestamp_index * step)) out.push_back(rec);
  }
  return out;
}

/// Index of the largest component; ties resolve periodic, trend, spike.
std::string dominant(double periodic, double trend, double spike) {
  if (periodic <= 0.0 && trend <= 0.0 && spike <= 0.0) return "none";
  if (periodic >= trend && periodic >= spike) return "periodic";
  if (trend >= spike) return "trend";
  return "spike";
}

Json params_json(const JobParams& p) {
  return Json{{"dataset_id", p.dataset_id},
              {"L", p.history},
              {"aggregator", p.aggregator.to_string()},
              {"spike_mode", std::string(scoring::to_string(p.spike_mode))},
              {"granularity", std::string(to_string(p.granularity))}};
}

}  // namespace

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::pending:
      return "pending";
    case JobStatus::running:
      return "running";
    case JobStatus::done:
      return "done";
    case JobStatus::failed:
      return "failed";
  }
  return "unknown";
}

WorkerPool::WorkerPool(std::size_t threads) {
  threads = std::max<std::size_t>(1, threads);
  for (std::size_t i = 0; i < threads; ++i) {
    threads_.emplace_back([this] {
      for (;;) {
        std::function<void()> task;
        {
          std::unique_lock lock(mutex_);
          ready_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
          if (queue_.empty()) return;
          task = std::move(queue_.front());
          queue_.erase(queue_.begin());
        }
        task();
      }
    });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  ready_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::submit(std::function<void()> task) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(task));
  }
  ready_.notify_one();
}

struct Api::Job {
  std::string id;
  JobParams params;
  std::shared_ptr<const store::Dataset> dataset;
  std::atomic<JobStatus> status{JobStatus::pending};
  std::atomic<std::size_t> completed{0};
  std::size_t total = 0;
  // Per-series slots; each task writes only its own.
  std::vector<MetricSeries> series;
  std::vector<std::vector<ScoreRecord>> records;
  std::mutex error_mutex;
  std::string error;
  std::shared_ptr<const JobResult> result;  // set once, under Api::mutex_

  Json to_json() const {
    const auto s = status.load();
    Json j{{"job_id", id},
           {"params", params_json(params)},
           {"status", std::string(to_string(s))},
           {"progress", total == 0 ? 1.0 : static_cast<double>(completed.load()) / static_cast<double>(total)}};
    if (s == JobStatus::failed) j["error"] = error;
    return j;
  }
};

Api::Api(store::Store& store, std::size_t workers) : store_(store) {
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  pool_ = std::make_unique<WorkerPool>(workers);
}

Api::~Api() { pool_.reset(); }

ApiResponse Api::datasets() const {
  Json list = Json::array();
  for (const auto& id : store_.ids()) {
    const auto d = store_.get(id);
    if (!d) continue;
    list.push_back({{"dataset_id", id},
                    {"centers", d->manifest.centers},
                    {"metrics", d->manifest.metrics},
                    {"native_granularity", std::string(to_string(d->manifest.native_granularity))},
                    {"row_count", d->manifest.row_count},
                    {"series", d->series.size()}});
  }
  return {200, Json{{"datasets", list}}};
}

ApiResponse Api::detect(const std::string& body) {
  return guarded([&]() -> ApiResponse {
    const Json in = Json::parse(body, nullptr, false);
    if (in.is_discarded() || !in.is_object()) throw bad_request("body must be a JSON object");
    if (!in.contains("dataset_id") || !in["dataset_id"].is_string()) throw bad_request("dataset_id is required");

    JobParams p;
    p.dataset_id = in["dataset_id"].get<std::string>();
    const auto dataset = store_.get(p.dataset_id);
    if (!dataset) throw ApiError(404, "not_found", "unknown dataset '" + p.dataset_id + "'");

    if (in.contains("L")) {
      const auto& l = in["L"];
      if (!l.is_number_integer()) throw bad_request("L must be an integer");
      if (l.get<std::int64_t>() < static_cast<std::int64_t>(scoring::kMinApiHistory)) {
        throw bad_request("L must be >= " + std::to_string(scoring::kMinApiHistory));
      }
      p.history = l.get<std::size_t>();
    }
    const auto text = [&](const char* key) -> std::optional<std::string> {
      if (!in.contains(key)) return std::nullopt;
      if (!in[key].is_string()) throw bad_request(std::string(key) + " must be a string");
      return in[key].get<std::string>();
    };
    if (const auto a = text("aggregator")) p.aggregator = scoring::Aggregator::parse(*a);
    if (const auto s = text("spike_mode")) p.spike_mode = scoring::parse_spike_mode(*s);
    p.granularity = dataset->manifest.native_granularity;
    if (const auto g = text("granularity")) p.granularity = parse_granularity(*g);
    if (step_seconds(p.granularity) < step_seconds(dataset->manifest.native_granularity)) {
      throw bad_request("granularity is finer than the dataset's native " +
                        std::string(to_string(dataset->manifest.native_granularity)));
    }

    // The dataset's address identifies its version: a re-ingested dataset is a new object.
    const std::string key = p.dataset_id + '\x1f' + std::to_string(reinterpret_cast<std::uintptr_t>(dataset.get())) +
                            '\x1f' + std::to_string(p.history) + '\x1f' + p.aggregator.to_string() + '\x1f' +
                            std::string(scoring::to_string(p.spike_mode)) + '\x1f' +
                            std::string(to_string(p.granularity));
    std::shared_ptr<Job> job;
    {
      std::lock_guard lock(mutex_);
      if (const auto it = job_by_key_.find(key); it != job_by_key_.end()) {
        return {200, jobs_.at(it->second)->to_json()};
      }
      job = std::make_shared<Job>();
      job->id = "job-" + std::to_string(next_id_++);
      job->params = p;
      job->dataset = dataset;
      job->total = dataset->series.size();
      job->series.resize(job->total);
      job->records.resize(job->total);
      jobs_[job->id] = job;
      job_by_key_[key] = job->id;
    }
    run(job);
    return {202, job->to_json()};
  });
}

void Api::run(const std::shared_ptr<Job>& job) {
  const auto finish = [this, job] {
    auto result = std::make_shared<JobResult>();
    result->dataset = job->dataset;
    result->granularity = job->params.granularity;
    result->series = std::move(job->series);
    for (auto& part : job->records) {
      result->records.insert(result->records.end(), part.begin(), part.end());
    }
    job->records.clear();
    {
      std::lock_guard lock(mutex_);
      if (job->error.empty()) {
        job->result = result;
        latest_ = result;
        job->status = JobStatus::done;
      } else {
        job->status = JobStatus::failed;
      }
    }
    finished_.notify_all();
  };
  if (job->total == 0) {
    finish();
    return;
  }
  scoring::ScoringOptions opts;
  opts.history = job->params.history;
  opts.aggregator = job->params.aggregator;
  opts.spike_mode = job->params.spike_mode;
  for (std::size_t i = 0; i < job->total; ++i) {
    pool_->submit([job, i, opts, finish] {
      JobStatus expected = JobStatus::pending;
      job->status.compare_exchange_strong(expected, JobStatus::running);
      try {
        const auto& source = job->dataset->series[i];
        auto s = store::resample(source, job->params.granularity);
        auto recs = scoring::score_series(s, opts);
        const std::int64_t base = s.start_timestamp / step_seconds(s.granularity);
        for (auto& r : recs) r.timestamp_index += base;
        job->series[i] = std::move(s);
        job->records[i] = std::move(recs);
      } catch (const std::exception& e) {
        std::lock_guard lock(job->error_mutex);
        if (job->error.empty()) job->error = job->dataset->series[i].node.key() + ":" + job->dataset->series[i].metric + ": " + e.what();
      }
      if (job->completed.fetch_add(1) + 1 == job->total) finish();
    });
  }
}

ApiResponse Api::job(const std::string& job_id) const {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return {404, error_body("not_found", "unknown job '" + job_id + "'")};
  return {200, it->second->to_json()};
}

bool Api::wait(const std::string& job_id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return false;
  const auto job = it->second;
  return finished_.wait_for(lock, timeout, [&] {
    const auto s = job->status.load();
    return s == JobStatus::done || s == JobStatus::failed;
  });
}

std::shared_ptr<const JobResult> Api::result_for(const Query& query) const {
  std::lock_guard lock(mutex_);
  if (const auto id = param(query, "job")) {
    const auto it = jobs_.find(*id);
    if (it == jobs_.end()) throw ApiError(404, "not_found", "unknown job '" + *id + "'");
    if (!it->second->result) throw ApiError(409, "conflict", "job '" + *id + "' has not completed");
    return it->second->result;
  }
  if (!latest_) throw ApiError(409, "conflict", "no completed detection job");
  return latest_;
}

ApiResponse Api::spatial(const Query& query) const {
  return guarded([&]() -> ApiResponse {
    const auto r = result_for(query);
    const auto top = int_param(query, "top", std::numeric_limits<std::int64_t>::max(), 1);
    const double threshold = real_param(query, "threshold", 0.0);
    const auto records = records_in(*r, range_param(query));
    const auto hierarchy = store::node_paths(*r->dataset);
    const auto centers = analytics::spatial_rollup(records, threshold, hierarchy);
    Json out = Json::array();
    for (std::size_t i = 0; i < centers.size() && static_cast<std::int64_t>(i) < top; ++i) {
      Json clusters = Json::array();
      for (const auto& c : centers[i].clusters) {
        Json nodes = Json::array();
        for (const auto& [node, score] : c.node_scores) nodes.push_back({{"node", node}, {"score", num(score)}});
        clusters.push_back({{"cluster", c.cluster_id}, {"score", num(c.score)}, {"nodes", nodes}});
      }
      out.push_back({{"center", centers[i].center_id}, {"score", num(centers[i].score)}, {"clusters", clusters}});
    }
    return {200, Json{{"centers", out}, {"threshold", num(threshold)}}};
  });
}

ApiResponse Api::temporal(const Query& query) const {
  return guarded([&]() -> ApiResponse {
    const auto r = result_for(query);
    Granularity target = r->granularity;
    if (const auto g = param(query, "granularity")) target = parse_granularity(*g);
    const auto records = records_in(*r, range_param(query));
    const auto points = analytics::temporal_rollup(records, r->granularity, target);
    const std::int64_t step = step_seconds(target);
    Json list = Json::array();
    std::set<std::string> metrics;
    for (const auto& p : points) {
      Json sums = Json::object();
      Json top = Json::object();
      for (const auto& [m, v] : p.per_metric_sum) {
        sums[m] = num(v);
        metrics.insert(m);
      }
      for (const auto& [m, f] : p.is_top5) top[m] = f;
      list.push_back({{"timestamp", p.timestamp_index * step}, {"sums", sums}, {"top5", top}});
    }
    return {200, Json{{"granularity", std::string(to_string(target))}, {"metrics", metrics}, {"points", list}}};
  });
}

ApiResponse Api::rank(const Query& query) const {
  return guarded([&]() -> ApiResponse {
    const auto r = result_for(query);
    const auto offset = int_param(query, "offset", 0, 0);
    const auto limit = int_param(query, "limit", 50, 0);
    const auto records = records_in(*r, range_param(query));
    Json items = Json::array();
    std::size_t total = 0;
    if (!records.empty()) {
      const auto ranks = analytics::rank_nodes(records);
      total = ranks.size();
      for (std::size_t i = static_cast<std::size_t>(std::min<std::int64_t>(offset, static_cast<std::int64_t>(total)));
           i < total && static_cast<std::int64_t>(items.size()) < limit; ++i) {
        Json per_metric = Json::object();
        for (const auto& [m, v] : ranks[i].per_metric_mean) per_metric[m] = num(v);
        items.push_back({{"rank", ranks[i].rank},
                         {"node", node_json(ranks[i].node)},
                         {"total_score", num(ranks[i].total_score)},
                         {"per_metric_mean", per_metric}});
      }
    }
    return {200, Json{{"total", total}, {"offset", offset}, {"limit", limit}, {"items", items}}};
  });
}

namespace {

/// The node's series restricted to a range, aligned column by column.
struct NodeView {
  NodePath node;
  store::AlignedMatrix matrix;
};

const MetricSeries* find_series(const JobResult& r, const NodePath& node, const std::string& metric) {
  for (const auto& s : r.series)
    if (s.node == node && s.metric == metric) return &s;
  return nullptr;
}

store::TimeRange to_time_range(const Range& r) { return {r.from, r.to}; }

NodePath resolve_node(const JobResult& r, const std::string& id, const Query& q) {
  std::vector<NodePath> matches;
  for (const auto& p : store::node_paths(*r.dataset)) {
    if (p.key() == id || p.node_id == id) {
      if (const auto c = param(q, "center"); c && *c != p.center_id) continue;
      if (const auto k = param(q, "cluster"); k && *k != p.cluster_id) continue;
      matches.push_back(p);
    }
  }
  if (matches.empty()) throw ApiError(404, "not_found", "unknown node '" + id + "'");
  if (matches.size() > 1) throw bad_request("node id '" + id + "' is ambiguous; pass center and cluster");
  return matches.front();
}

}  // namespace

ApiResponse Api::performance(const std::string& node_id, const Query& query) const {
  return guarded([&]() -> ApiResponse {
    const auto r = result_for(query);
    const std::string mode = param(query, "mode").value_or("raw");
    if (mode != "raw" && mode != "deviation" && mode != "normalized" && mode != "pca") {
      throw bad_request("mode must be raw, deviation, normalized or pca");
    }
    const Range range = range_param(query);
    const NodePath node = resolve_node(*r, node_id, query);
    std::vector<MetricSeries> own;
    for (const auto& s : r->series)
      if (s.node == node) own.push_back(s);
    if (own.empty()) throw ApiError(404, "not_found", "node has no series");
    store::AlignedMatrix m;
    try {
      m = store::align(own, to_time_range(range));
    } catch (const InvalidArgument&) {
      throw bad_request("no data for this node in the requested range");
    }
    const std::int64_t step = step_seconds(m.granularity);
    const std::size_t cols = m.columns();
    Json timestamps = Json::array();
    for (std::size_t j = 0; j < cols; ++j) timestamps.push_back(m.start_timestamp + static_cast<std::int64_t>(j) * step);

    // Scores by (metric, absolute index).
    std::map<std::pair<std::string, std::int64_t>, const ScoreRecord*> score_at;
    for (const auto& rec : r->records)
      if (rec.node == node) score_at[{rec.metric, rec.timestamp_index}] = &rec;

    std::vector<double> sum_p(cols, 0.0), sum_t(cols, 0.0), sum_s(cols, 0.0);
    Json metrics = Json::array();
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      const auto& raw = m.rows[i];
      std::vector<double> values = raw;
      Json extra = Json::object();
      if (mode == "normalized") {
        values = analytics::normalize_series(raw);
      } else if (mode == "deviation") {
        std::vector<std::vector<double>> carriers;
        for (const auto& s : r->series) {
          if (s.metric != m.metrics[i] || s.node.center_id != node.center_id || s.node.cluster_id != node.cluster_id) {
            continue;
          }
          auto cut = store::slice(s, to_time_range(range));
          if (!cut.values.empty()) carriers.push_back(std::move(cut.values));
        }
        const double baseline = analytics::cluster_baseline(carriers);
        for (auto& v : values) v -= baseline;
        extra["baseline"] = num(baseline);
      }
      Json vals = Json::array(), per = Json::array(), tr = Json::array(), sp = Json::array(), agg = Json::array(),
           dom = Json::array();
      for (std::size_t j = 0; j < cols; ++j) {
        vals.push_back(num(values[j]));
        const std::int64_t index = (m.start_timestamp + static_cast<std::int64_t>(j) * step) / step;
        const auto it = score_at.find({m.metrics[i], index});
        const ScoreRecord zero{};
        const ScoreRecord& rec = it == score_at.end() ? zero : *it->second;
        per.push_back(num(rec.periodic));
        tr.push_back(num(rec.trend));
        sp.push_back(num(rec.spike));
        agg.push_back(num(rec.aggregated));
        dom.push_back(dominant(rec.periodic, rec.trend, rec.spike));
        sum_p[j] += rec.periodic;
        sum_t[j] += rec.trend;
        sum_s[j] += rec.spike;
      }
      const auto summary = analytics::magnet_summary(raw, 0, raw.size());
      Json entry{{"metric", m.metrics[i]},
                 {"values", vals},
                 {"scores", {{"periodic", per}, {"trend", tr}, {"spike", sp}, {"aggregated", agg}}},
                 {"dominant", dom},
                 {"summary",
                  {{"max", num(summary.max)}, {"mean", num(summary.mean)}, {"min", num(summary.min)}, {"std", num(summary.std)}}}};
      entry.update(extra);
      metrics.push_back(std::move(entry));
    }
    Json overall = Json::array();
    for (std::size_t j = 0; j < cols; ++j) overall.push_back(dominant(sum_p[j], sum_t[j], sum_s[j]));
    Json out{{"node", node_json(node)},
             {"mode", mode},
             {"granularity", std::string(to_string(m.granularity))},
             {"timestamps", timestamps},
             {"metrics", metrics},
             {"dominant", overall}};
    if (mode == "pca") {
      const auto projection = m.rows.size() >= 2 ? analytics::pca_project(m.rows) : analytics::standardize(m.rows[0]);
      Json p = Json::array();
      for (double v : projection) p.push_back(num(v));
      out["projection"] = p;
    }
    return {200, out};
  });
}

ApiResponse Api::cluster(const Query& query) const {
  return guarded([&]() -> ApiResponse {
    const auto r = result_for(query);
    const Range range = range_param(query);
    analytics::EmbedOptions eo;
    if (const auto m = param(query, "method")) eo.method = analytics::parse_embed_method(*m);
    eo.perplexity = real_param(query, "perplexity", eo.perplexity);
    if (!(eo.perplexity > 0.0)) throw bad_request("perplexity must be positive");
    eo.seed = static_cast<std::uint64_t>(int_param(query, "seed", 0, 0));
    const auto resolution = static_cast<std::size_t>(int_param(query, "resolution", 64, 2));
    if (resolution > 512) throw bad_request("resolution must be <= 512");

    const auto nodes = store::node_paths(*r->dataset);
    // Metrics every node carries, over the range all of them cover.
    std::set<std::string> common;
    bool first = true;
    for (const auto& n : nodes) {
      std::set<std::string> mine;
      for (const auto& s : r->series)
        if (s.node == n) mine.insert(s.metric);
      if (first) {
        common = mine;
        first = false;
      } else {
        std::set<std::string> both;
        std::set_intersection(common.begin(), common.end(), mine.begin(), mine.end(), std::inserter(both, both.end()));
        common = std::move(both);
      }
    }
    Json out{{"points", Json::array()}, {"glyphs", Json::array()}, {"metrics", common}, {"warnings", Json::array()}};
    if (nodes.empty()) return {200, out};
    if (common.empty()) throw bad_request("nodes share no metric");

    std::vector<MetricSeries> used;
    for (const auto& n : nodes)
      for (const auto& m : common) used.push_back(*find_series(*r, n, m));
    store::AlignedMatrix all;
    try {
      all = store::align(used, to_time_range(range));
    } catch (const InvalidArgument&) {
      throw bad_request("nodes have no common data in the requested range");
    }
    const std::size_t per_node = common.size();
    const auto row_of = [&](std::size_t node, std::size_t metric) -> const std::vector<double>& {
      // align orders rows by metric label, stably, so node order is kept within a metric.
      return all.rows[metric * nodes.size() + node];
    };

    std::vector<analytics::FeatureVector> features;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      std::vector<std::vector<double>> rows;
      for (std::size_t m = 0; m < per_node; ++m) rows.push_back(row_of(n, m));
      features.push_back(analytics::node_feature_vector(rows));
    }
    analytics::standardize_features(features);
    std::vector<std::vector<double>> vectors;
    for (auto& f : features) vectors.push_back(std::move(f.values));

    const auto embedding = analytics::embed_2d(vectors, eo);
    if (!embedding.warning.empty()) out["warnings"].push_back(embedding.warning);

    std::vector<double> lof_raw(nodes.size(), 0.0), lof_norm(nodes.size(), 0.0);
    if (nodes.size() >= 3) {
      std::optional<std::size_t> k;
      if (param(query, "k")) {
        k = static_cast<std::size_t>(int_param(query, "k", 0, 2));
        if (*k >= nodes.size()) throw bad_request("k must be smaller than the node count");
      }
      const auto lof = analytics::lof_scores(vectors, k);
      lof_raw = lof.raw;
      lof_norm = lof.normalized;
      out["k"] = lof.k;
    } else {
      out["warnings"].push_back("LOF needs at least 3 nodes; scores set to 0");
    }

    std::vector<analytics::Point2> positions;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      const auto& p = embedding.positions[n];
      positions.push_back(p);
      out["points"].push_back({{"node", node_json(nodes[n])},
                               {"x", num(p[0])},
                               {"y", num(p[1])},
                               {"lof", num(lof_norm[n])},
                               {"lof_raw", num(lof_raw[n])}});
      Json arcs = Json::array();
      std::size_t m = 0;
      for (const auto& metric : common) {
        const auto& row = row_of(n, m++);
        Json vals = Json::array();
        for (double v : analytics::normalize_series(row)) vals.push_back(num(v));
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(row.size());
        arcs.push_back({{"metric", metric}, {"mean", num(mean)}, {"values", vals}});
      }
      out["glyphs"].push_back({{"node", node_json(nodes[n])}, {"metrics", arcs}});
    }
    const auto field = analytics::kde_density(positions, resolution);
    Json grid = Json::array();
    for (double v : field.grid) grid.push_back(num(v));
    out["density"] = {{"nx", field.nx},
                      {"ny", field.ny},
                      {"x0", num(field.x0)},
                      {"y0", num(field.y0)},
                      {"dx", num(field.dx)},
                      {"dy", num(field.dy)},
                      {"hx", num(field.bandwidth.hx)},
                      {"hy", num(field.bandwidth.hy)},
                      {"grid", grid}};
    out["method"] = std::string(embedding.method == analytics::EmbedMethod::tsne ? "tsne" : "pca");
    out["fallback"] = embedding.fallback;
    out["timestamps"] = {{"from", all.start_timestamp},
                         {"count", all.columns()},
                         {"step", step_seconds(all.granularity)}};
    return {200, out};
  });
}

struct HttpServer::Impl {
  Api& api;
  ServerOptions options;
  httplib::Server server;
  bool bound = false;

  Impl(Api& a, ServerOptions o) : api(a), options(std::move(o)) {}

  static Query to_query(const httplib::Request& req) {
    Query q;
    for (const auto& [k, v] : req.params) q[k] = v;
    return q;
  }

  static void reply(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/api/datasets", [this](const httplib::Request&, httplib::Response& res) { reply(res, api.datasets()); });
    server.Post("/api/detect",
                [this](const httplib::Request& req, httplib::Response& res) { reply(res, api.detect(req.body)); });
    server.Get(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api.job(req.matches[1]));
    });
    server.Get("/api/overview/spatial", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api.spatial(to_query(req)));
    });
    server.Get("/api/overview/temporal", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api.temporal(to_query(req)));
    });
    server.Get("/api/nodes/rank", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api.rank(to_query(req)));
    });
    server.Get(R"(/api/nodes/(.+)/performance)", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api.performance(req.matches[1], to_query(req)));
    });
    server.Get("/api/cluster", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api.cluster(to_query(req)));
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        res.set_content(error_body(res.status == 404 ? "not_found" : "error", httplib::status_message(res.status)).dump(),
                        "application/json");
      }
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string message = "unknown error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        message = e.what();
      } catch (...) {
      }
      res.status = 500;
      res.set_content(error_body("internal", message).dump(), "application/json");
    });
  }
};

HttpServer::HttpServer(Api& api, ServerOptions options) : impl_(std::make_unique<Impl>(api, std::move(options))) {
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (impl_->bound) return impl_->options.port;
  if (impl_->options.port == 0) {
    impl_->options.port = impl_->server.bind_to_any_port(impl_->options.bind);
    if (impl_->options.port < 0) throw Error("cannot bind " + impl_->options.bind);
  } else if (!impl_->server.bind_to_port(impl_->options.bind, impl_->options.port)) {
    throw Error("cannot bind " + impl_->options.bind + ":" + std::to_string(impl_->options.port));
  }
  impl_->bound = true;
  return impl_->options.port;
}

bool HttpServer::listen() {
  bind();
  return impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace clouddet::service
