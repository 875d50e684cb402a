#include "clouddet/embedding.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "clouddet/core.hpp"

namespace clouddet::analytics {

namespace {

Eigen::MatrixXd to_matrix(std::span<const std::vector<double>> vectors) {
  const auto n = static_cast<Eigen::Index>(vectors.size());
  const auto d = static_cast<Eigen::Index>(vectors.empty() ? 0 : vectors.front().size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& v = vectors[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(v.size()) != d) {
      throw InvalidArgument("embedding needs vectors of equal dimension");
    }
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = v[static_cast<std::size_t>(j)];
  }
  return x;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd norms = x.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * x * x.transpose()).colwise() + norms;
  d.rowwise() += norms.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

/// Row-conditional affinities p(j|i) whose entropy matches log(perplexity),
/// by bisection on the Gaussian precision.
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& d2, double perplexity) {
  const Eigen::Index n = d2.rows();
  const double target = std::log(perplexity);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    Eigen::VectorXd row(n);
    for (int step = 0; step < 200; ++step) {
      // Subtract the smallest off-diagonal distance to keep exp() in range.
      double dmin = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) dmin = std::min(dmin, d2(i, j));
      double sum = 0.0;
      double weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        row(j) = j == i ? 0.0 : std::exp(-beta * (d2(i, j) - dmin));
        sum += row(j);
        weighted += row(j) * (d2(i, j) - dmin);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      row /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    p.row(i) = row.transpose();
  }
  return p;
}

std::vector<std::array<double, 2>> tsne(const Eigen::MatrixXd& x, const EmbedOptions& o,
                                        double perplexity) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd p = conditional_affinities(squared_distances(x), perplexity);
  p = ((p + p.transpose()) / (2.0 * static_cast<double>(n))).eval();
  p = p.cwiseMax(1e-12);
  p.diagonal().setZero();

  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> init(0.0, 1e-4);
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = init(rng);
    y(i, 1) = init(rng);
  }
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd num(n, n);
  Eigen::MatrixXd grad(n, 2);

  for (int it = 0; it < o.iterations; ++it) {
    const double exaggeration = it < o.exaggeration_iterations ? o.early_exaggeration : 1.0;
    const double momentum = it < o.exaggeration_iterations ? 0.5 : 0.8;
    if (it == o.exaggeration_iterations) {
      // The second phase starts from rest, as in the reference optimizer.
      velocity.setZero();
      gains.setOnes();
    }

    // Student-t kernel (1 + |yi - yj|^2)^-1.
    num = (1.0 + squared_distances(y).array()).inverse().matrix();
    num.diagonal().setZero();
    const double z = std::max(num.sum(), std::numeric_limits<double>::min());

    const Eigen::MatrixXd coeff = ((exaggeration * p).array() - num.array() / z) * num.array();
    const Eigen::VectorXd row_sum = coeff.rowwise().sum();
    grad = 4.0 * (row_sum.asDiagonal() * y - coeff * y);

    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        const bool same_sign = (grad(i, j) > 0) == (velocity(i, j) > 0);
        gains(i, j) = same_sign ? std::max(gains(i, j) * 0.8, 0.01) : gains(i, j) + 0.2;
        velocity(i, j) = momentum * velocity(i, j) - o.learning_rate * gains(i, j) * grad(i, j);
      }
    }
    y += velocity;
    y.rowwise() -= y.colwise().mean();
  }

  std::vector<std::array<double, 2>> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = {y(i, 0), y(i, 1)};
  return out;
}

}  // namespace

EmbedMethod parse_embed_method(std::string_view text) {
  if (text == "tsne") return EmbedMethod::tsne;
  if (text == "pca") return EmbedMethod::pca;
  throw InvalidArgument("unknown embedding method '" + std::string(text) + "'");
}

std::vector<std::array<double, 2>> pca_2d(std::span<const std::vector<double>> vectors) {
  std::vector<std::array<double, 2>> out(vectors.size(), {0.0, 0.0});
  if (vectors.empty()) return out;
  Eigen::MatrixXd x = to_matrix(vectors);
  x.rowwise() -= x.colwise().mean();
  if (x.cols() == 0 || x.cwiseAbs().maxCoeff() == 0.0) return out;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::MatrixXd& v = svd.matrixV();
  for (Eigen::Index c = 0; c < std::min<Eigen::Index>(2, v.cols()); ++c) {
    if (svd.singularValues()(c) <= 0.0) continue;
    Eigen::VectorXd w = v.col(c);
    Eigen::Index arg = 0;
    w.cwiseAbs().maxCoeff(&arg);
    if (w(arg) < 0) w = -w;
    const Eigen::VectorXd s = x * w;
    for (std::size_t i = 0; i < out.size(); ++i) out[i][static_cast<std::size_t>(c)] = s(static_cast<Eigen::Index>(i));
  }
  return out;
}

Embedding embed_2d(std::span<const std::vector<double>> vectors, const EmbedOptions& options) {
  Embedding e;
  e.method = options.method;
  if (options.method == EmbedMethod::pca) {
    e.positions = pca_2d(vectors);
    return e;
  }
  if (vectors.size() < 3) {
    e.method = EmbedMethod::pca;
    e.fallback = true;
    e.warning = "t-SNE needs at least 3 vectors; used PCA";
    e.positions = pca_2d(vectors);
    return e;
  }
  const Eigen::MatrixXd x = to_matrix(vectors);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  if (((x.rowwise() - mean).cwiseAbs().maxCoeff()) == 0.0) {
    e.method = EmbedMethod::pca;
    e.fallback = true;
    e.warning = "all vectors are identical; used PCA";
    e.positions = pca_2d(vectors);
    return e;
  }
  if (!(options.perplexity > 0.0) || options.iterations < 0 || !(options.learning_rate > 0.0)) {
    throw InvalidArgument("t-SNE needs positive perplexity and learning rate");
  }
  const double cap = static_cast<double>(vectors.size() - 1) / 3.0;
  const double perplexity = std::max(1.0, std::min(options.perplexity, cap));
  if (perplexity < options.perplexity) {
    e.warning = "perplexity capped at " + std::to_string(perplexity);
  }
  e.positions = tsne(x, options, perplexity);
  return e;
}

}  // namespace clouddet::analytics
