#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "facetda/error.hpp"

namespace facetda {

enum class EmbeddingMethod { relative, mds, tsne };

std::string_view to_string(EmbeddingMethod method);
EmbeddingMethod embedding_method_from_string(std::string_view name);

struct TsneParams {
  double perplexity = 30.0;
  int iterations = 1000;
  std::uint64_t seed = 0;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  /// <= 0 selects max(n / early_exaggeration, 50).
  double learning_rate = 0.0;
  int dim = 2;
};

struct Embedding {
  EmbeddingMethod method = EmbeddingMethod::relative;
  /// One row per frame; 1 column for relative distance, 2 otherwise.
  Eigen::MatrixXd coords;
  std::optional<double> fitness;

  int keyframe = -1;  // relative
  int dim = 0;        // mds
  TsneParams tsne;    // tsne
  /// Sum of the clamped negative eigenvalues over the sum of |eigenvalues|
  /// (mds only; 0 for Euclidean input).
  double euclidean_deficit = 0.0;
};

/// Row `keyframe` of the dissimilarity matrix, unchanged.
Eigen::VectorXd relative_distance(const Eigen::MatrixXd& dm, int keyframe);
Embedding relative_embedding(const Eigen::MatrixXd& dm, int keyframe);

/// Torgerson scaling: double-centred squared dissimilarities, top `dim`
/// eigenpairs with negative eigenvalues clamped to zero. Each axis is signed
/// so that its largest-magnitude coordinate is positive.
Embedding classical_mds(const Eigen::MatrixXd& dm, int dim = 2);

/// Exact t-SNE on a precomputed dissimilarity matrix. Gaussian affinities use
/// the squared dissimilarities; each row's bandwidth is bisected to the target
/// perplexity.
Embedding tsne(const Eigen::MatrixXd& dm, const TsneParams& params = {});

struct ShepardFitness {
  double value = 0.0;
  bool degenerate = false;  // one side has no rank variation
};

/// Spearman correlation (average ranks for ties) between the upper-triangle
/// dissimilarities and the Euclidean distances between rows of `coords`.
ShepardFitness shepard_fitness(const Eigen::MatrixXd& dm, const Eigen::MatrixXd& coords);

/// Average ranks (1-based) with ties sharing the mean of their positions.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& values);

}  // namespace facetda
