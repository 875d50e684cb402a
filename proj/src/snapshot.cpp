#include "clouddet/snapshot.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace clouddet::snapshot {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'D', 'S', '1'};
// Guards against absurd allocations from corrupt files.
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>(u & 0xFF);
    u = static_cast<U>(u >> 8);
  }
  out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::ostream& out, const std::string& s) {
  if (s.size() > std::numeric_limits<std::uint32_t>::max()) throw SnapshotError("string too long");
  put_le(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::make_unsigned_t<T>;
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) throw SnapshotError("snapshot is truncated");
  U u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<U>((u << 8) | bytes[i]);
  return static_cast<T>(u);
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

std::string get_str(std::istream& in) {
  const auto n = get_le<std::uint32_t>(in);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw SnapshotError("snapshot is truncated");
  return s;
}

Granularity get_granularity(std::istream& in) {
  const auto g = granularity_from_code(get_le<std::uint8_t>(in));
  if (!g) throw SnapshotError("unknown granularity code");
  return *g;
}

std::uint64_t get_count(std::istream& in) {
  const auto n = get_le<std::uint64_t>(in);
  if (n > kMaxCount) throw SnapshotError("implausible count in snapshot");
  return n;
}

}  // namespace

void write_snapshot(std::ostream& out, const store::Dataset& dataset) {
  const auto& m = dataset.manifest;
  out.write(kMagic.data(), kMagic.size());
  put_str(out, m.dataset_id);
  put_le(out, static_cast<std::uint32_t>(m.centers.size()));
  for (const auto& c : m.centers) put_str(out, c);
  put_le(out, static_cast<std::uint32_t>(m.metrics.size()));
  for (const auto& c : m.metrics) put_str(out, c);
  put_le(out, static_cast<std::uint8_t>(m.native_granularity));
  put_le(out, static_cast<std::int64_t>(m.row_count));
  put_le(out, static_cast<std::uint64_t>(dataset.series.size()));
  for (const auto& s : dataset.series) {
    put_str(out, s.node.center_id);
    put_str(out, s.node.cluster_id);
    put_str(out, s.node.node_id);
    put_str(out, s.metric);
    put_le(out, static_cast<std::int64_t>(s.start_timestamp));
    put_le(out, static_cast<std::uint8_t>(s.granularity));
    put_le(out, static_cast<std::uint64_t>(s.size()));
    for (double v : s.values) put_f64(out, v);
    std::vector<char> bits((s.size() + 7) / 8, 0);
    if (s.missing.size() == s.size()) {
      for (std::size_t i = 0; i < s.size(); ++i)
        if (s.missing[i]) bits[i / 8] = static_cast<char>(bits[i / 8] | (1 << (i % 8)));
    }
    out.write(bits.data(), static_cast<std::streamsize>(bits.size()));
  }
  if (!out) throw SnapshotError("failed to write snapshot");
}

store::Dataset read_snapshot(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw SnapshotError("not a CDS1 snapshot");
  store::Dataset d;
  auto& m = d.manifest;
  m.dataset_id = get_str(in);
  for (auto n = get_le<std::uint32_t>(in); n > 0; --n) m.centers.push_back(get_str(in));
  for (auto n = get_le<std::uint32_t>(in); n > 0; --n) m.metrics.push_back(get_str(in));
  m.native_granularity = get_granularity(in);
  m.row_count = get_le<std::int64_t>(in);
  const auto count = get_count(in);
  for (std::uint64_t k = 0; k < count; ++k) {
    MetricSeries s;
    s.node.center_id = get_str(in);
    s.node.cluster_id = get_str(in);
    s.node.node_id = get_str(in);
    s.metric = get_str(in);
    s.start_timestamp = get_le<std::int64_t>(in);
    s.granularity = get_granularity(in);
    const auto n = get_count(in);
    s.values.resize(n);
    for (auto& v : s.values) v = get_f64(in);
    std::vector<unsigned char> bits((n + 7) / 8);
    if (!bits.empty() && !in.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bits.size()))) {
      throw SnapshotError("snapshot is truncated");
    }
    s.missing.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.missing[i] = (bits[i / 8] >> (i % 8)) & 1U;
    d.series.push_back(std::move(s));
  }
  return d;
}

void save_snapshot(const std::string& path, const store::Dataset& dataset) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SnapshotError("cannot write '" + tmp + "'");
    write_snapshot(out, dataset);
    out.flush();
    if (!out) throw SnapshotError("failed to write '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw SnapshotError("cannot replace '" + path + "'");
  }
}

store::Dataset load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open '" + path + "'");
  return read_snapshot(in);
}

}  // namespace clouddet::snapshot
