#include "clouddet/projection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "clouddet/core.hpp"

namespace clouddet::analytics {

namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  if (v.empty()) return m;
  const auto n = static_cast<double>(v.size());
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / n);
  return m;
}

// Relative to the data magnitude so rounding noise on a constant is not variance.
bool degenerate(const Moments& m) {
  return !(m.std > 1e-12 * std::max(1.0, std::abs(m.mean)));
}

}  // namespace

std::vector<double> standardize(std::span<const double> values) {
  const auto m = moments(values);
  std::vector<double> out(values.size(), 0.0);
  if (degenerate(m)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - m.mean) / m.std;
  return out;
}

std::vector<double> pca_project(std::span<const std::vector<double>> metrics) {
  if (metrics.size() < 2) throw InvalidArgument("PCA projection needs at least two metrics");
  const std::size_t n = metrics.front().size();
  for (const auto& m : metrics) {
    if (m.size() != n) throw InvalidArgument("PCA projection needs equal-length metrics");
  }
  std::vector<std::vector<double>> kept;
  for (const auto& m : metrics) {
    if (!degenerate(moments(m))) kept.push_back(standardize(m));
  }
  std::vector<double> out(n, 0.0);
  if (kept.empty() || n == 0) return out;

  const auto r = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), r);
  for (Eigen::Index j = 0; j < r; ++j) {
    for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i), j) = kept[j][i];
  }
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::VectorXd w = eig.eigenvectors().col(r - 1);  // eigenvalues ascending
  Eigen::Index arg = 0;
  w.cwiseAbs().maxCoeff(&arg);
  if (w(arg) < 0) w = -w;
  const Eigen::VectorXd proj = x * w;
  for (std::size_t i = 0; i < n; ++i) out[i] = proj(static_cast<Eigen::Index>(i));
  return out;
}

std::vector<double> normalize_series(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::clamp(2.0 * (values[i] - *lo) / span - 1.0, -1.0, 1.0);
  }
  return out;
}

FeatureVector node_feature_vector(std::span<const std::vector<double>> metrics) {
  FeatureVector f;
  f.metrics = metrics.size();
  if (metrics.empty()) return f;
  f.timestamps = metrics.front().size();
  for (const auto& m : metrics) {
    if (m.size() != f.timestamps) throw InvalidArgument("feature vector needs aligned metrics");
  }
  f.values.reserve(f.metrics * f.timestamps);
  for (std::size_t t = 0; t < f.timestamps; ++t) {
    for (const auto& m : metrics) f.values.push_back(m[t]);
  }
  return f;
}

void standardize_features(std::vector<FeatureVector>& vectors) {
  if (vectors.empty()) return;
  const std::size_t r = vectors.front().metrics;
  for (const auto& v : vectors) {
    if (v.metrics != r || v.values.size() != v.metrics * v.timestamps) {
      throw InvalidArgument("feature vectors disagree on metric layout");
    }
  }
  for (std::size_t m = 0; m < r; ++m) {
    std::vector<double> pool;
    for (const auto& v : vectors) {
      for (std::size_t i = m; i < v.values.size(); i += r) pool.push_back(v.values[i]);
    }
    const auto mo = moments(pool);
    const bool flat = degenerate(mo);
    for (auto& v : vectors) {
      for (std::size_t i = m; i < v.values.size(); i += r) {
        v.values[i] = flat ? 0.0 : (v.values[i] - mo.mean) / mo.std;
      }
    }
  }
}

MagnetSummary magnet_summary(std::span<const double> values, std::size_t begin, std::size_t end) {
  if (begin >= end || end > values.size()) throw InvalidArgument("magnet range is empty or out of bounds");
  const auto range = values.subspan(begin, end - begin);
  const auto [lo, hi] = std::minmax_element(range.begin(), range.end());
  const auto m = moments(range);
  return {*hi, m.mean, *lo, m.std};
}

double cluster_baseline(std::span<const std::vector<double>> carriers) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& c : carriers) {
    sum = std::accumulate(c.begin(), c.end(), sum);
    count += c.size();
  }
  if (count == 0) throw InvalidArgument("cluster baseline needs at least one value");
  return sum / static_cast<double>(count);
}

}  // namespace clouddet::analytics
