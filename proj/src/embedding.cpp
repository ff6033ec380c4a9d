#include "facetda/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

namespace facetda {

std::string_view to_string(EmbeddingMethod method) {
  switch (method) {
    case EmbeddingMethod::relative: return "relative";
    case EmbeddingMethod::mds: return "mds";
    case EmbeddingMethod::tsne: return "tsne";
  }
  return "relative";
}

EmbeddingMethod embedding_method_from_string(std::string_view name) {
  if (name == "relative") return EmbeddingMethod::relative;
  if (name == "mds") return EmbeddingMethod::mds;
  if (name == "tsne") return EmbeddingMethod::tsne;
  throw ParameterError("unknown embedding method '" + std::string(name) + "'");
}

namespace {

void check_square(const Eigen::MatrixXd& dm) {
  if (dm.rows() == 0 || dm.rows() != dm.cols()) throw ParameterError("dissimilarity matrix must be square and non-empty");
  if (!dm.allFinite()) throw ParameterError("dissimilarity matrix must be finite");
}

}  // namespace

// ---------------------------------------------------------------------------

Eigen::VectorXd relative_distance(const Eigen::MatrixXd& dm, int keyframe) {
  check_square(dm);
  if (keyframe < 0 || keyframe >= dm.rows())
    throw ParameterError("keyframe " + std::to_string(keyframe) + " out of range [0, " +
                         std::to_string(dm.rows()) + ")");
  return dm.row(keyframe).transpose();
}

Embedding relative_embedding(const Eigen::MatrixXd& dm, int keyframe) {
  Embedding e;
  e.method = EmbeddingMethod::relative;
  e.keyframe = keyframe;
  e.coords = relative_distance(dm, keyframe);
  return e;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd average_ranks(const Eigen::VectorXd& values) {
  const auto n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values(a) < values(b); });
  Eigen::VectorXd ranks(n);
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && values(order[end]) == values(order[start])) ++end;
    const double mean_rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (Eigen::Index k = start; k < end; ++k) ranks(order[k]) = mean_rank;
    start = end;
  }
  return ranks;
}

ShepardFitness shepard_fitness(const Eigen::MatrixXd& dm, const Eigen::MatrixXd& coords) {
  check_square(dm);
  const auto n = dm.rows();
  if (coords.rows() != n) throw ParameterError("coordinate count does not match the dissimilarity matrix");
  if (n < 3) throw ParameterError("shepard fitness needs at least 3 items");

  Eigen::VectorXd input(n * (n - 1) / 2), embedded(n * (n - 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j, ++k) {
      input(k) = dm(i, j);
      embedded(k) = (coords.row(i) - coords.row(j)).norm();
    }
  Eigen::VectorXd a = average_ranks(input), b = average_ranks(embedded);
  a.array() -= a.mean();
  b.array() -= b.mean();
  const double denom = std::sqrt(a.squaredNorm() * b.squaredNorm());
  if (denom == 0.0) return {0.0, true};
  return {std::clamp(a.dot(b) / denom, -1.0, 1.0), false};
}

// ---------------------------------------------------------------------------

Embedding classical_mds(const Eigen::MatrixXd& dm, int dim) {
  check_square(dm);
  const auto n = dm.rows();
  if (dim < 1) throw ParameterError("mds dimension must be >= 1");
  if (n < dim + 1) throw ParameterError("mds needs at least dim + 1 items");

  const Eigen::MatrixXd squared = dm.array().square().matrix();
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd gram = -0.5 * centering * squared * centering;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw ParameterError("mds eigendecomposition failed");

  const Eigen::VectorXd& eigenvalues = solver.eigenvalues();  // ascending
  Embedding e;
  e.method = EmbeddingMethod::mds;
  e.dim = dim;
  e.coords.resize(n, dim);
  for (int c = 0; c < dim; ++c) {
    const Eigen::Index idx = n - 1 - c;
    Eigen::VectorXd axis = solver.eigenvectors().col(idx) * std::sqrt(std::max(eigenvalues(idx), 0.0));
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    e.coords.col(c) = axis;
  }
  const double total = eigenvalues.cwiseAbs().sum();
  const double negative = (-eigenvalues.array()).max(0.0).sum();
  e.euclidean_deficit = total > 0 ? negative / total : 0.0;
  if (n >= 3) e.fitness = shepard_fitness(dm, e.coords).value;
  return e;
}

// ---------------------------------------------------------------------------

namespace {

// Conditional affinities P(j|i) with each row's precision bisected so that
// exp(entropy) equals the perplexity.
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& squared, double perplexity) {
  const auto n = squared.rows();
  const double target = std::log(perplexity);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double min_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) min_d = std::min(min_d, squared(i, j));

    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    Eigen::VectorXd row(n);
    for (int iter = 0; iter < 200; ++iter) {
      double sum = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double shifted = squared(i, j) - min_d;
        row(j) = j == i ? 0.0 : std::exp(-beta * shifted);
        sum += row(j);
        weighted += row(j) * shifted;
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      row /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
    }
    P.row(i) = row.transpose();
  }
  return P;
}

}  // namespace

Embedding tsne(const Eigen::MatrixXd& dm, const TsneParams& params) {
  check_square(dm);
  const auto n = dm.rows();
  if (n < 5) throw ParameterError("t-SNE needs at least 5 items");
  if (!(params.perplexity >= 1.0) || params.perplexity > static_cast<double>(n - 1))
    throw ParameterError("perplexity " + std::to_string(params.perplexity) + " is infeasible for " +
                         std::to_string(n) + " items (must lie in [1, n - 1])");
  if (params.iterations < 1) throw ParameterError("t-SNE iterations must be >= 1");
  if (params.dim < 1) throw ParameterError("t-SNE dimension must be >= 1");

  const Eigen::MatrixXd squared = dm.array().square().matrix();
  const Eigen::MatrixXd conditional = conditional_affinities(squared, params.perplexity);
  Eigen::MatrixXd P = (conditional + conditional.transpose()) / (2.0 * static_cast<double>(n));
  P = P.cwiseMax(1e-12);
  P.diagonal().setZero();

  const double eta = params.learning_rate > 0
                         ? params.learning_rate
                         : std::max(static_cast<double>(n) / params.early_exaggeration, 50.0);

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> init(0.0, 1e-4);
  Eigen::MatrixXd Y(n, params.dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < params.dim; ++c) Y(i, c) = init(rng);

  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, params.dim);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, params.dim);
  Eigen::MatrixXd grad(n, params.dim);
  Eigen::MatrixXd num(n, n);

  for (int iter = 0; iter < params.iterations; ++iter) {
    const bool early = iter < params.exaggeration_iterations;
    const double exaggeration = early ? params.early_exaggeration : 1.0;
    const double momentum = early ? 0.5 : 0.8;

    double qsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double w = 1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm());
        num(i, j) = num(j, i) = w;
        qsum += 2.0 * w;
      }
    }
    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = std::max(num(i, j) / qsum, 1e-12);
        grad.row(i) += 4.0 * (exaggeration * P(i, j) - q) * num(i, j) * (Y.row(i) - Y.row(j));
      }

    for (Eigen::Index i = 0; i < n; ++i)
      for (int c = 0; c < params.dim; ++c) {
        const bool same_sign = (grad(i, c) > 0) == (velocity(i, c) > 0);
        gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01) : gains(i, c) + 0.2;
        velocity(i, c) = momentum * velocity(i, c) - eta * gains(i, c) * grad(i, c);
      }
    Y += velocity;
    Y.rowwise() -= Y.colwise().mean();
  }

  Embedding e;
  e.method = EmbeddingMethod::tsne;
  e.tsne = params;
  e.coords = Y;
  e.fitness = shepard_fitness(dm, Y).value;
  return e;
}

}  // namespace facetda
