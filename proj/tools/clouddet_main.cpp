#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "clouddet/bench.hpp"
#include "clouddet/csv_ingest.hpp"
#include "clouddet/ranking.hpp"
#include "clouddet/service.hpp"
#include "clouddet/snapshot.hpp"
#include "clouddet/synth.hpp"

namespace fs = std::filesystem;
using namespace clouddet;
using nlohmann::json;

namespace {

fs::path data_dir() {
  const char* env = std::getenv("CLOUDDET_DATA_DIR");
  return env && *env ? fs::path(env) : fs::path("clouddet-data");
}

fs::path snapshot_path(const std::string& id) { return data_dir() / (id + ".cds"); }

json read_json_arg(const std::string& text) {
  if (!text.empty() && text.front() == '{') return json::parse(text);
  std::ifstream in(text);
  if (!in) throw Error("cannot open '" + text + "'");
  return json::parse(in);
}

/// Schema from a JSON file or inline JSON object:
/// {"timestamp": "...", "center": "...", "cluster": "...", "node": "...",
///  "metrics": {"label": "column"} or ["column", ...], "fixed_node": "c/k/n",
///  "timestamp_scale": 0.001, "granularity": "hour"}
ingest::SchemaMap parse_schema(const std::string& text) {
  ingest::SchemaMap s;
  if (text.empty()) return s;
  const json j = read_json_arg(text);
  if (!j.is_object()) throw InvalidArgument("schema must be a JSON object");
  for (const auto& [key, slot] : {std::pair{"timestamp", &s.timestamp}, std::pair{"center", &s.center},
                                  std::pair{"cluster", &s.cluster}, std::pair{"node", &s.node}}) {
    if (j.contains(key)) *slot = j[key].get<std::string>();
  }
  if (j.contains("metrics")) {
    const auto& m = j["metrics"];
    if (m.is_object()) {
      for (const auto& [label, column] : m.items()) s.metrics.emplace_back(column.get<std::string>(), label);
    } else {
      for (const auto& column : m) s.metrics.emplace_back(column.get<std::string>(), column.get<std::string>());
    }
  }
  if (j.contains("fixed_node")) {
    const auto path = j["fixed_node"].get<std::string>();
    const auto a = path.find('/');
    const auto b = a == std::string::npos ? a : path.find('/', a + 1);
    if (b == std::string::npos) throw InvalidArgument("fixed_node must be center/cluster/node");
    s.fixed_node = NodePath{path.substr(0, a), path.substr(a + 1, b - a - 1), path.substr(b + 1)};
  }
  if (j.contains("timestamp_scale")) s.timestamp_scale = j["timestamp_scale"].get<double>();
  if (j.contains("granularity")) s.granularity = parse_granularity(j["granularity"].get<std::string>());
  return s;
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const long v = std::stol(item, &used);
    if (used != item.size() || v <= 0) throw InvalidArgument("bad grid value '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw InvalidArgument("empty grid");
  return out;
}

void write_out(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  body(out);
  std::cout << "wrote " << path << "\n";
}

store::Dataset load_dataset(const std::string& id) {
  const auto path = snapshot_path(id);
  if (!fs::exists(path)) throw Error("no dataset '" + id + "' in " + data_dir().string());
  return snapshot::load_snapshot(path.string());
}

int cmd_ingest(const std::string& csv, const std::string& schema, std::string id) {
  auto result = ingest::ingest_csv_file(csv, parse_schema(schema), std::move(id));
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  fs::create_directories(data_dir());
  const auto path = snapshot_path(result.manifest.dataset_id);
  snapshot::save_snapshot(path.string(), {result.manifest, result.series});
  const auto& m = result.manifest;
  std::cout << "dataset     " << m.dataset_id << "\n"
            << "rows        " << m.row_count << " (" << result.skipped_rows << " skipped)\n"
            << "series      " << result.series.size() << "\n"
            << "metrics     " << m.metrics.size() << "\n"
            << "granularity " << to_string(m.native_granularity) << "\n"
            << "snapshot    " << path.string() << "\n";
  return 0;
}

int cmd_datasets() {
  if (!fs::exists(data_dir())) return 0;
  for (const auto& e : fs::directory_iterator(data_dir())) {
    if (e.path().extension() != ".cds") continue;
    const auto d = snapshot::load_snapshot(e.path().string());
    std::cout << std::left << std::setw(24) << d.manifest.dataset_id << std::setw(8) << d.series.size()
              << to_string(d.manifest.native_granularity) << "\n";
  }
  return 0;
}

int cmd_detect(const std::string& id, std::size_t history, const std::string& agg, const std::string& spike,
               const std::string& granularity, const std::string& out, std::size_t top) {
  if (history < scoring::kMinApiHistory) {
    throw InvalidArgument("--L must be >= " + std::to_string(scoring::kMinApiHistory));
  }
  const auto dataset = load_dataset(id);
  scoring::ScoringOptions opts;
  opts.history = history;
  opts.aggregator = scoring::Aggregator::parse(agg);
  opts.spike_mode = scoring::parse_spike_mode(spike);
  const Granularity g = granularity.empty() ? dataset.manifest.native_granularity : parse_granularity(granularity);

  std::vector<ScoreRecord> all;
  std::vector<std::int64_t> stamps;
  for (const auto& source : dataset.series) {
    const auto s = store::resample(source, g);
    const auto recs = scoring::score_series(s, opts);
    for (const auto& r : recs) {
      all.push_back(r);
      stamps.push_back(s.timestamp_at(static_cast<std::size_t>(r.timestamp_index)));
    }
  }
  write_out(out, [&](std::ostream& os) {
    os << "center,cluster,node,metric,timestamp,periodic,trend,spike,aggregated,warmup\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < all.size(); ++i) {
      const auto& r = all[i];
      os << r.node.center_id << ',' << r.node.cluster_id << ',' << r.node.node_id << ',' << r.metric << ','
         << stamps[i] << ',' << r.periodic << ',' << r.trend << ',' << r.spike << ',' << r.aggregated << ','
         << (r.warmup ? 1 : 0) << '\n';
    }
  });
  if (all.empty()) {
    std::cout << "no series\n";
    return 0;
  }
  const auto ranks = analytics::rank_nodes(all);
  std::cout << std::left << std::setw(6) << "rank" << std::setw(40) << "node" << "total score\n";
  for (std::size_t i = 0; i < std::min(top, ranks.size()); ++i) {
    std::cout << std::setw(6) << ranks[i].rank << std::setw(40) << ranks[i].node.key() << std::fixed
              << std::setprecision(4) << ranks[i].total_score << "\n";
  }
  return 0;
}

service::HttpServer* g_server = nullptr;

int cmd_serve(const std::string& bind, int port, const std::string& origin, std::size_t workers) {
  store::Store store;
  if (fs::exists(data_dir())) {
    for (const auto& e : fs::directory_iterator(data_dir())) {
      if (e.path().extension() != ".cds") continue;
      auto d = snapshot::load_snapshot(e.path().string());
      std::cout << "loaded " << d.manifest.dataset_id << " (" << d.series.size() << " series)\n";
      store.put(std::move(d));
    }
  }
  service::Api api(store, workers);
  service::HttpServer server(api, {bind, port, origin});
  const int bound = server.bind();
  std::cout << "listening on " << bind << ":" << bound << std::endl;
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  server.listen();
  g_server = nullptr;
  return 0;
}

eval::AccuracyOptions accuracy_options(const std::string& grid, const std::string& agg, const std::string& spike) {
  eval::AccuracyOptions o;
  if (!grid.empty()) o.history_grid = parse_grid(grid);
  o.aggregator = scoring::Aggregator::parse(agg);
  o.spike_mode = scoring::parse_spike_mode(spike);
  return o;
}

int cmd_bench_accuracy(const std::string& data, const std::string& labels, const std::string& schema,
                       std::size_t seeds, const eval::AccuracyOptions& opts, const std::string& out) {
  if (data.empty() != labels.empty()) throw InvalidArgument("--data and --labels go together");
  if (data.empty()) {
    const auto suite = eval::run_synthetic_suite(synth::SynthSpec{}, seeds, opts);
    std::cout << "synthetic suite, " << seeds << " seeds, 1.7% anomalies\n";
    for (std::size_t i = 0; i < suite.seeds.size(); ++i) {
      std::cout << "seed " << std::left << std::setw(6) << suite.seeds[i] << std::fixed << std::setprecision(4)
                << suite.tables[i].mean_auc << "\n";
    }
    std::cout << "mean AUC over seeds " << std::fixed << std::setprecision(4) << suite.mean_auc << "\n";
    write_out(out, [&](std::ostream& os) {
      os << "seed,";
      std::ostringstream block;
      for (std::size_t i = 0; i < suite.seeds.size(); ++i) {
        std::ostringstream one;
        eval::write_accuracy_csv(one, suite.tables[i]);
        std::string line;
        std::istringstream rows(one.str());
        std::getline(rows, line);
        if (i == 0) os << line << "\n";
        while (std::getline(rows, line)) os << suite.seeds[i] << ',' << line << "\n";
      }
    });
    return 0;
  }
  const auto ds = ingest::ingest_csv_file(data, parse_schema(schema));
  const auto label_set = ingest::read_labels_file(labels);
  std::vector<eval::LabeledSeries> series;
  for (const auto& s : ds.series) {
    auto flags = label_set.for_series(s);
    series.push_back({s, std::move(flags)});
  }
  const auto table = eval::run_accuracy_bench(series, opts);
  eval::write_accuracy_text(std::cout, table);
  write_out(out, [&](std::ostream& os) { eval::write_accuracy_csv(os, table); });
  return 0;
}

int cmd_bench_scale(const std::string& data, const std::string& schema, const std::string& metric,
                    const std::string& lengths, std::size_t reps, std::size_t history, const std::string& out) {
  std::vector<double> values;
  if (data.empty()) {
    values = synth::synth_generate(synth::SynthSpec{}).series.values;
  } else {
    const auto ds = ingest::ingest_csv_file(data, parse_schema(schema));
    for (const auto& s : ds.series) {
      if (metric.empty() || s.metric == metric) {
        values = s.values;
        break;
      }
    }
    if (values.empty()) throw InvalidArgument("no series matches --metric '" + metric + "'");
  }
  const auto grid = lengths.empty() ? eval::default_scale_lengths() : parse_grid(lengths);
  scoring::ScoringOptions opts;
  opts.history = history;
  const auto table = eval::run_scalability_bench(values, grid, reps, eval::pipeline_detector(opts));
  eval::write_scalability_text(std::cout, table);
  write_out(out, [&](std::ostream& os) { eval::write_scalability_csv(os, table); });
  return 0;
}

/// Spec JSON fields mirror SynthSpec: length, base_period, noise_std,
/// anomaly_rate, mix {spike, trend_shift, period_shift}, seed.
int cmd_synth(const std::string& spec_text, std::optional<std::uint64_t> seed, const std::string& out,
              const std::string& labels_out, std::int64_t start) {
  synth::SynthSpec spec;
  if (!spec_text.empty()) {
    const json j = read_json_arg(spec_text);
    spec.length = j.value("length", spec.length);
    spec.base_period = j.value("base_period", spec.base_period);
    spec.noise_std = j.value("noise_std", spec.noise_std);
    spec.anomaly_rate = j.value("anomaly_rate", spec.anomaly_rate);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("mix")) {
      spec.mix.spike = j["mix"].value("spike", 0.0);
      spec.mix.trend_shift = j["mix"].value("trend_shift", 0.0);
      spec.mix.period_shift = j["mix"].value("period_shift", 0.0);
    }
  }
  if (seed) spec.seed = *seed;
  const auto r = synth::synth_generate(spec);
  const auto& s = r.series;
  const std::int64_t step = step_seconds(s.granularity);
  const auto emit = [&](std::ostream& os) {
    os << "timestamp,center,cluster,node," << s.metric << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < s.size(); ++i) {
      os << start + static_cast<std::int64_t>(i) * step << ',' << s.node.center_id << ',' << s.node.cluster_id << ','
         << s.node.node_id << ',' << s.values[i] << "\n";
    }
  };
  if (out.empty()) {
    emit(std::cout);
  } else {
    write_out(out, emit);
  }
  write_out(labels_out, [&](std::ostream& os) {
    os << "node,metric,timestamp,is_anomaly\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
      os << s.node.node_id << ',' << s.metric << ',' << start + static_cast<std::int64_t>(i) * step << ','
         << (r.labels[i] ? 1 : 0) << "\n";
    }
  });
  if (!out.empty()) {
    std::cout << "seed " << spec.seed << ", " << s.size() << " points, "
              << std::count(r.labels.begin(), r.labels.end(), true) << " labeled anomalous\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised anomaly detection for cloud node metrics"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Parse a metrics CSV and store it as a snapshot");
  std::string csv, schema, dataset_id;
  ingest->add_option("csv", csv, "CSV file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--schema", schema, "Schema map: JSON file or inline JSON object");
  ingest->add_option("--id", dataset_id, "Dataset id (default: file stem)");

  auto* datasets = app.add_subcommand("datasets", "List stored datasets");

  auto* detect = app.add_subcommand("detect", "Score every series of a dataset");
  std::string agg = "avg", spike = "hinge", granularity, out;
  std::size_t history = 48, top = 10;
  detect->add_option("--dataset", dataset_id, "Dataset id")->required();
  detect->add_option("--L", history, "History length (>= 8)")->capture_default_str();
  detect->add_option("--agg", agg, "min | max | avg[:w1,w2,w3]")->capture_default_str();
  detect->add_option("--spike", spike, "hinge | verbatim")->capture_default_str();
  detect->add_option("--granularity", granularity, "m | h | d (default: native)");
  detect->add_option("--out", out, "Write per-point scores as CSV");
  detect->add_option("--top", top, "Ranked nodes to print")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Run the HTTP API over the stored datasets");
  std::string bind = "0.0.0.0", origin = "*";
  int port = 8080;
  std::size_t workers = 0;
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--bind", bind, "Bind address")->capture_default_str();
  serve->add_option("--cors-origin", origin, "Allowed CORS origin")->capture_default_str();
  serve->add_option("--workers", workers, "Detection worker threads (0: one per core)");

  auto* bench = app.add_subcommand("bench", "Accuracy and scalability harness");
  bench->require_subcommand(1);
  auto* accuracy = bench->add_subcommand("accuracy", "ROC/AUC over an L grid and a threshold grid");
  std::string data, labels, grid;
  std::size_t seeds = 20;
  accuracy->add_option("--data", data, "Metrics CSV (default: synthetic suite)");
  accuracy->add_option("--labels", labels, "Label CSV node,metric,timestamp,is_anomaly");
  accuracy->add_option("--schema", schema, "Schema map for --data");
  accuracy->add_option("--seeds", seeds, "Synthetic seeds when no --data")->capture_default_str();
  accuracy->add_option("--L-grid", grid, "Comma-separated history lengths (default 5..50 step 5)");
  accuracy->add_option("--agg", agg, "Aggregator")->capture_default_str();
  accuracy->add_option("--spike", spike, "Spike mode")->capture_default_str();
  accuracy->add_option("--out", out, "CSV output");

  auto* scale = bench->add_subcommand("scale", "Runtime against series length");
  std::string metric, lengths;
  std::size_t reps = 10;
  scale->add_option("--data", data, "Metrics CSV (default: one synthetic series)");
  scale->add_option("--schema", schema, "Schema map for --data");
  scale->add_option("--metric", metric, "Metric to time (default: first series)");
  scale->add_option("--lengths", lengths, "Comma-separated prefix lengths (default 100..700 step 100)");
  scale->add_option("--reps", reps, "Repetitions per length")->capture_default_str();
  scale->add_option("--L", history, "History length")->capture_default_str();
  scale->add_option("--out", out, "CSV output");

  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic series");
  std::string spec, labels_out;
  std::optional<std::uint64_t> seed;
  std::int64_t start = 1700000000 / 3600 * 3600;
  synth->add_option("--spec", spec, "SynthSpec: JSON file or inline JSON object");
  synth->add_option("--seed", seed, "Seed (overrides the spec)");
  synth->add_option("--out", out, "Metrics CSV (default: stdout)");
  synth->add_option("--labels", labels_out, "Label CSV");
  synth->add_option("--start", start, "Epoch seconds of the first point")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(csv, schema, dataset_id);
    if (*datasets) return cmd_datasets();
    if (*detect) return cmd_detect(dataset_id, history, agg, spike, granularity, out, top);
    if (*serve) return cmd_serve(bind, port, origin, workers);
    if (*accuracy) {
      return cmd_bench_accuracy(data, labels, schema, seeds, accuracy_options(grid, agg, spike), out);
    }
    if (*scale) return cmd_bench_scale(data, schema, metric, lengths, reps, history, out);
    if (*synth) return cmd_synth(spec, seed, out, labels_out, start);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
