#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include <httplib.h>

#include "clouddet/service.hpp"

using namespace clouddet;
using namespace clouddet::service;
using namespace std::chrono_literals;

namespace {

constexpr std::int64_t kStart = 1700000000 / 3600 * 3600;
constexpr std::size_t kLength = 200;
constexpr std::size_t kSpikeAt = 150;

/// 2 centers x 2 clusters x 2 nodes, metrics cpu and mem, hourly. Node
/// c1/k1/n1 carries a spike on cpu.
store::Dataset fixture(std::size_t centers = 2, std::size_t clusters = 2, std::size_t nodes = 2) {
  store::Dataset d;
  d.manifest.dataset_id = "fx";
  d.manifest.metrics = {"cpu", "mem"};
  d.manifest.native_granularity = Granularity::hour;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (std::size_t c = 1; c <= centers; ++c) {
    d.manifest.centers.push_back("c" + std::to_string(c));
    for (std::size_t k = 1; k <= clusters; ++k)
      for (std::size_t n = 1; n <= nodes; ++n)
        for (const std::string m : {"cpu", "mem"}) {
          MetricSeries s;
          s.node = {"c" + std::to_string(c), "k" + std::to_string(k), "n" + std::to_string(n)};
          s.metric = m;
          s.granularity = Granularity::hour;
          s.start_timestamp = kStart;
          for (std::size_t i = 0; i < kLength; ++i) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / 24.0;
            s.values.push_back(10.0 * static_cast<double>(c) + 0.05 * static_cast<double>(i) +
                               std::sin(phase + static_cast<double>(n)) + noise(rng));
          }
          if (c == 1 && k == 1 && n == 1 && m == "cpu") s.values[kSpikeAt] += 5.0;
          s.missing.assign(kLength, false);
          d.series.push_back(std::move(s));
        }
  }
  return d;
}

std::string detect_body(int history = 48, const std::string& dataset = "fx") {
  return Json{{"dataset_id", dataset}, {"L", history}, {"aggregator", "avg"}, {"spike_mode", "hinge"}}.dump();
}

struct Fixture {
  store::Store store;
  Api api{store, 2};

  explicit Fixture(store::Dataset d = fixture()) { store.put(std::move(d)); }

  std::string run(int history = 48) {
    const auto r = api.detect(detect_body(history));
    REQUIRE((r.status == 202 || r.status == 200));
    const std::string id = r.body["job_id"];
    REQUIRE(api.wait(id, 60s));
    REQUIRE(api.job(id).body["status"] == "done");
    return id;
  }
};

}  // namespace

TEST_CASE("detect validation and idempotence") {
  Fixture f;
  CHECK(f.api.spatial({}).status == 409);
  CHECK(f.api.spatial({}).body["code"] == "conflict");

  const auto first = f.api.detect(detect_body());
  CHECK(first.status == 202);
  const std::string id = first.body["job_id"];
  CHECK_FALSE(id.empty());
  const auto again = f.api.detect(detect_body());
  CHECK(again.body["job_id"] == id);
  CHECK(f.api.detect(detect_body(1)).status == 400);
  CHECK(f.api.detect(detect_body(7)).status == 400);
  CHECK(f.api.detect(detect_body(48, "absent")).status == 404);
  CHECK(f.api.detect("{not json").status == 400);
  CHECK(f.api.detect(R"({"L": 48})").status == 400);
  CHECK(f.api.detect(R"({"dataset_id": "fx", "aggregator": "median"})").status == 400);
  CHECK(f.api.detect(R"({"dataset_id": "fx", "spike_mode": "loud"})").status == 400);
  CHECK(f.api.detect(R"({"dataset_id": "fx", "granularity": "m"})").status == 400);
  CHECK(f.api.detect(R"({"dataset_id": "fx", "L": "48"})").status == 400);
  const auto bad = f.api.detect(detect_body(1));
  CHECK(bad.body.contains("code"));
  CHECK(bad.body.contains("message"));

  REQUIRE(f.api.wait(id, 60s));
  const auto done = f.api.job(id);
  CHECK(done.body["status"] == "done");
  CHECK(done.body["progress"] == 1.0);
  CHECK(done.body["params"]["L"] == 48);
  CHECK(f.api.job("job-999").status == 404);

  // Different parameters are a different job.
  const auto other = f.api.detect(detect_body(24));
  CHECK(other.body["job_id"] != id);
}

TEST_CASE("spatial overview") {
  Fixture f;
  f.run();
  const auto all = f.api.spatial({{"top", "20"}});
  REQUIRE(all.status == 200);
  const auto& centers = all.body["centers"];
  CHECK(centers.size() == 2);
  for (std::size_t i = 1; i < centers.size(); ++i) CHECK(centers[i - 1]["score"] >= centers[i]["score"]);

  const auto one = f.api.spatial({{"top", "1"}});
  REQUIRE(one.body["centers"].size() == 1);
  CHECK(one.body["centers"][0]["center"] == centers[0]["center"]);

  const auto inf = f.api.spatial({{"threshold", "inf"}});
  for (const auto& c : inf.body["centers"]) CHECK(c["clusters"].empty());

  // The rollup keeps every unit of score.
  double total = 0.0;
  const auto ranks = f.api.rank({{"limit", "1000"}});
  for (const auto& p : ranks.body["items"]) total += p["total_score"].get<double>();
  double rolled = 0.0;
  for (const auto& c : centers) rolled += c["score"].get<double>();
  CHECK(std::abs(total - rolled) <= 1e-9);

  CHECK(f.api.spatial({{"top", "0"}}).status == 400);
  CHECK(f.api.spatial({{"threshold", "x"}}).status == 400);
  CHECK(f.api.spatial({{"threshold", "-1"}}).status == 400);
}

TEST_CASE("temporal overview") {
  Fixture f;
  f.run();
  CHECK(f.api.temporal({{"from", "100"}, {"to", "100"}}).status == 400);
  CHECK(f.api.temporal({{"from", "soon"}}).status == 400);
  const auto full = f.api.temporal({});
  REQUIRE(full.status == 200);
  CHECK(full.body["points"].size() == kLength);
  CHECK(full.body["points"][0]["timestamp"] == kStart);
  std::map<std::string, int> flags;
  for (const auto& p : full.body["points"]) {
    for (const auto& [m, v] : p["sums"].items()) CHECK(v.get<double>() >= 0.0);
    for (const auto& [m, v] : p["top5"].items()) flags[m] += v.get<bool>() ? 1 : 0;
  }
  CHECK(flags["cpu"] == 5);
  CHECK(flags["mem"] == 5);

  const auto ranged = f.api.temporal({{"from", std::to_string(kStart + 3600 * 10)}, {"to", std::to_string(kStart + 3600 * 20)}});
  CHECK(ranged.body["points"].size() == 10);
  const auto daily = f.api.temporal({{"granularity", "day"}});
  CHECK(daily.body["points"].size() <= 10);
  CHECK(daily.body["granularity"] == "day");
  CHECK(f.api.temporal({{"granularity", "minute"}}).status == 400);
}

TEST_CASE("node ranking") {
  Fixture f;
  f.run();
  const auto five = f.api.rank({{"limit", "5"}});
  CHECK(five.body["items"].size() == 5);
  CHECK(five.body["total"] == 8);
  CHECK(five.body["items"][0]["rank"] == 1);
  CHECK(f.api.rank({{"offset", "100"}}).body["items"].empty());
  const auto tail = f.api.rank({{"offset", "6"}});
  CHECK(tail.body["items"].size() == 2);
  CHECK(tail.body["items"][0]["rank"] == 7);
  CHECK(f.api.rank({{"limit", "-1"}}).status == 400);

  Fixture single(fixture(1, 1, 1));
  single.run();
  const auto r = single.api.rank({});
  REQUIRE(r.body["items"].size() == 1);
  CHECK(r.body["items"][0]["rank"] == 1);
}

TEST_CASE("node performance views") {
  const auto data = fixture();
  Fixture f(data);
  f.run();
  const auto raw = f.api.performance("c1/k1/n1", {{"mode", "raw"}});
  REQUIRE(raw.status == 200);
  CHECK(raw.body["timestamps"].size() == kLength);
  const auto& cpu = raw.body["metrics"][0];
  CHECK(cpu["metric"] == "cpu");
  for (std::size_t i = 0; i < kLength; ++i) CHECK(cpu["values"][i].get<double>() == data.series[0].values[i]);

  // The injected spike is the dominant cause at its timestamp.
  CHECK(cpu["scores"]["spike"][kSpikeAt].get<double>() == 1.0);
  CHECK(cpu["dominant"][kSpikeAt] == "spike");
  for (std::size_t i = 0; i <= 48; ++i) CHECK(cpu["dominant"][i] == "none");

  const auto norm = f.api.performance("c1/k1/n1", {{"mode", "normalized"}});
  for (const auto& m : norm.body["metrics"])
    for (const auto& v : m["values"]) {
      CHECK(v.get<double>() >= -1.0);
      CHECK(v.get<double>() <= 1.0);
    }

  const auto dev = f.api.performance("c1/k1/n1", {{"mode", "deviation"}});
  const double baseline = dev.body["metrics"][0]["baseline"];
  double expect = 0.0;
  for (std::size_t i = 0; i < kLength; ++i) expect += data.series[0].values[i] + data.series[2].values[i];
  CHECK(baseline == doctest::Approx(expect / (2.0 * kLength)));
  CHECK(dev.body["metrics"][0]["values"][3].get<double>() == doctest::Approx(data.series[0].values[3] - baseline));

  const auto pca = f.api.performance("c1/k1/n1", {{"mode", "pca"}, {"from", std::to_string(kStart)}, {"to", std::to_string(kStart + 3600 * 50)}});
  CHECK(pca.body["projection"].size() == 50);
  CHECK(pca.body["timestamps"].size() == 50);

  CHECK(f.api.performance("c1/k1/n1", {{"mode", "bogus"}}).status == 400);
  CHECK(f.api.performance("nobody", {}).status == 404);
  CHECK(f.api.performance("n1", {}).status == 400);  // in every cluster
  CHECK(f.api.performance("n1", {{"center", "c2"}, {"cluster", "k2"}}).status == 200);
}

TEST_CASE("cluster view") {
  Fixture three(fixture(1, 1, 3));
  three.run();
  const auto r = three.api.cluster({});
  REQUIRE(r.status == 200);
  REQUIRE(r.body["points"].size() == 3);
  for (const auto& p : r.body["points"]) {
    CHECK(p["lof"].get<double>() >= -1.0);
    CHECK(p["lof"].get<double>() <= 1.0);
  }
  for (const auto& v : r.body["density"]["grid"]) CHECK(v.get<double>() >= 0.0);
  CHECK(r.body["glyphs"].size() == 3);
  CHECK(r.body["glyphs"][0]["metrics"].size() == 2);
  CHECK(r.body["glyphs"][0]["metrics"][0]["values"].size() == kLength);

  Fixture f;
  f.run();
  const auto a = f.api.cluster({{"method", "pca"}});
  const auto b = f.api.cluster({{"method", "pca"}});
  REQUIRE(a.status == 200);
  CHECK(a.body.dump() == b.body.dump());
  CHECK(a.body["method"] == "pca");
  const auto t1 = f.api.cluster({{"perplexity", "2"}, {"k", "3"}});
  const auto t2 = f.api.cluster({{"perplexity", "2"}, {"k", "3"}});
  CHECK(t1.body.dump() == t2.body.dump());
  CHECK(t1.body["k"] == 3);
  CHECK(f.api.cluster({{"k", "8"}}).status == 400);
  CHECK(f.api.cluster({{"method", "umap"}}).status == 400);
  CHECK(f.api.cluster({{"perplexity", "0"}}).status == 400);
}

TEST_CASE("GET payloads are repeatable and finite") {
  Fixture f;
  f.run();
  const std::vector<std::function<ApiResponse()>> calls{
      [&] { return f.api.spatial({}); }, [&] { return f.api.temporal({}); },
      [&] { return f.api.rank({}); }, [&] { return f.api.performance("c2/k1/n2", {{"mode", "pca"}}); },
      [&] { return f.api.cluster({{"method", "pca"}}); }};
  for (const auto& call : calls) {
    const auto x = call().body.dump();
    CHECK(x == call().body.dump());
    CHECK(x.find("null") == std::string::npos);
    CHECK(x.find("NaN") == std::string::npos);
  }
}

TEST_CASE("readers never see a partial rank table") {
  Fixture f;
  std::atomic<bool> stop{false};
  std::atomic<int> partial{0};
  std::thread reader([&] {
    while (!stop) {
      const auto r = f.api.rank({{"limit", "100"}});
      if (r.status == 200 && r.body["total"] != 8) ++partial;
    }
  });
  for (int l : {16, 24, 32, 40}) f.run(l);
  stop = true;
  reader.join();
  CHECK(partial == 0);
}

TEST_CASE("http front end") {
  Fixture f;
  ServerOptions opts;
  opts.bind = "127.0.0.1";
  opts.port = 0;
  HttpServer server(f.api, opts);
  const int port = server.bind();
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });

  httplib::Client client("127.0.0.1", port);
  auto list = client.Get("/api/datasets");
  REQUIRE(list);
  CHECK(list->status == 200);
  CHECK(list->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(Json::parse(list->body)["datasets"][0]["dataset_id"] == "fx");

  auto early = client.Get("/api/nodes/rank");
  REQUIRE(early);
  CHECK(early->status == 409);

  auto post = client.Post("/api/detect", detect_body(), "application/json");
  REQUIRE(post);
  CHECK(post->status == 202);
  const std::string id = Json::parse(post->body)["job_id"];
  REQUIRE(f.api.wait(id, 60s));
  auto job = client.Get("/api/jobs/" + id);
  REQUIRE(job);
  CHECK(Json::parse(job->body)["status"] == "done");

  auto perf = client.Get("/api/nodes/c1%2Fk1%2Fn1/performance?mode=normalized");
  REQUIRE(perf);
  CHECK(perf->status == 200);
  auto rank = client.Get("/api/nodes/rank?limit=3");
  REQUIRE(rank);
  CHECK(Json::parse(rank->body)["items"].size() == 3);

  auto missing = client.Get("/api/nowhere");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(Json::parse(missing->body)["code"] == "not_found");
  auto pre = client.Options("/api/detect");
  REQUIRE(pre);
  CHECK(pre->status == 204);

  server.stop();
  t.join();
}
