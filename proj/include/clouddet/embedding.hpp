#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clouddet::analytics {

enum class EmbedMethod { tsne, pca };
EmbedMethod parse_embed_method(std::string_view text);

struct EmbedOptions {
  EmbedMethod method = EmbedMethod::tsne;
  double perplexity = 30.0;  // capped at (n - 1) / 3
  std::uint64_t seed = 0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
};

struct Embedding {
  std::vector<std::array<double, 2>> positions;
  EmbedMethod method = EmbedMethod::tsne;  // method actually used
  bool fallback = false;
  std::string warning;
};

/// 2-D layout of the feature vectors. t-SNE is exact (O(n^2) per iteration)
/// and deterministic for a given seed. Fewer than 3 vectors, or vectors with
/// no spread, fall back to PCA and set `fallback`.
Embedding embed_2d(std::span<const std::vector<double>> vectors, const EmbedOptions& options = {});

/// First two principal-component scores of the centered vectors.
std::vector<std::array<double, 2>> pca_2d(std::span<const std::vector<double>> vectors);

}  // namespace clouddet::analytics
