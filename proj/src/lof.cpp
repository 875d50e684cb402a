#include "clouddet/lof.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clouddet/core.hpp"

namespace clouddet::analytics {

std::size_t default_lof_k(std::size_t count) {
  return count == 0 ? 0 : std::min<std::size_t>(20, count - 1);
}

LofResult lof_scores(std::span<const std::vector<double>> vectors, std::optional<std::size_t> k) {
  const std::size_t n = vectors.size();
  LofResult out;
  out.k = k.value_or(default_lof_k(n));
  if (out.k < 2) throw InvalidArgument("LOF needs k >= 2");
  if (n < out.k + 1) {
    throw InvalidArgument("LOF with k=" + std::to_string(out.k) + " needs at least " +
                          std::to_string(out.k + 1) + " vectors, got " + std::to_string(n));
  }
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) throw InvalidArgument("LOF needs vectors of equal dimension");
  }

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = vectors[i][d] - vectors[j][d];
        s += diff * diff;
      }
      dist[i * n + j] = dist[j * n + i] = std::sqrt(s);
    }
  }

  std::vector<double> kdist(n);
  std::vector<std::vector<std::size_t>> hood(n);
  std::vector<double> row;
  for (std::size_t p = 0; p < n; ++p) {
    row.clear();
    for (std::size_t o = 0; o < n; ++o)
      if (o != p) row.push_back(dist[p * n + o]);
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(out.k - 1), row.end());
    kdist[p] = row[out.k - 1];
    for (std::size_t o = 0; o < n; ++o)
      if (o != p && dist[p * n + o] <= kdist[p]) hood[p].push_back(o);
  }

  std::vector<double> lrd(n);
  for (std::size_t p = 0; p < n; ++p) {
    double reach = 0.0;
    for (std::size_t o : hood[p]) reach += std::max(kdist[o], dist[p * n + o]);
    lrd[p] = 1.0 / (reach / static_cast<double>(hood[p].size()) + 1e-10);
  }
  out.raw.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (std::size_t o : hood[p]) s += lrd[o];
    out.raw[p] = s / static_cast<double>(hood[p].size()) / lrd[p];
  }
  out.normalized = normalize_lof(out.raw);
  return out;
}

std::vector<double> normalize_lof(std::span<const double> raw) {
  std::vector<double> out(raw.size(), 0.0);
  if (raw.empty()) return out;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double span = *hi - *lo;
  if (!(span > 1e-12 * std::max(1.0, std::abs(*hi)))) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::clamp(2.0 * (raw[i] - *lo) / span - 1.0, -1.0, 1.0);
  }
  return out;
}

}  // namespace clouddet::analytics
