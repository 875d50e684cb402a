#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "clouddet/scoring.hpp"
#include "clouddet/store.hpp"

namespace clouddet::service {

using Json = nlohmann::json;
using Query = std::map<std::string, std::string>;

struct ApiResponse {
  int status = 200;
  Json body;
};

enum class JobStatus { pending, running, done, failed };
std::string_view to_string(JobStatus status);

struct JobParams {
  std::string dataset_id;
  std::size_t history = 48;
  scoring::Aggregator aggregator = scoring::Aggregator::equal_weights();
  scoring::SpikeMode spike_mode = scoring::SpikeMode::hinge;
  Granularity granularity = Granularity::hour;
};

/// Everything a completed job publishes. Record timestamp_index values are
/// absolute: epoch seconds / step of `granularity`.
struct JobResult {
  std::shared_ptr<const store::Dataset> dataset;
  Granularity granularity = Granularity::hour;
  std::vector<MetricSeries> series;   // resampled, in dataset order
  std::vector<ScoreRecord> records;   // grouped by series, ascending time
};

class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void submit(std::function<void()> task);

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::vector<std::function<void()>> queue_;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

/// The HTTP handlers as plain functions of (path parameter, query, body), so
/// they can be exercised without a socket.
class Api {
 public:
  explicit Api(store::Store& store, std::size_t workers = 0);
  ~Api();

  ApiResponse datasets() const;
  ApiResponse detect(const std::string& body);
  ApiResponse job(const std::string& job_id) const;
  ApiResponse spatial(const Query& query) const;
  ApiResponse temporal(const Query& query) const;
  ApiResponse rank(const Query& query) const;
  ApiResponse performance(const std::string& node, const Query& query) const;
  ApiResponse cluster(const Query& query) const;

  /// Blocks until the job reaches a terminal state; false on timeout.
  bool wait(const std::string& job_id, std::chrono::milliseconds timeout) const;

 private:
  struct Job;
  std::shared_ptr<const JobResult> result_for(const Query& query) const;
  void run(const std::shared_ptr<Job>& job);

  store::Store& store_;
  mutable std::mutex mutex_;
  mutable std::condition_variable finished_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::map<std::string, std::string> job_by_key_;
  std::shared_ptr<const JobResult> latest_;
  std::uint64_t next_id_ = 1;
  std::unique_ptr<WorkerPool> pool_;
};

struct ServerOptions {
  std::string bind = "0.0.0.0";
  int port = 8080;  // 0 picks a free port
  std::string cors_origin = "*";
};

/// httplib front end for an Api.
class HttpServer {
 public:
  HttpServer(Api& api, ServerOptions options);
  ~HttpServer();

  /// Binds the socket and returns the port in use.
  int bind();
  /// Serves until stop(); binds first if needed.
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace clouddet::service
