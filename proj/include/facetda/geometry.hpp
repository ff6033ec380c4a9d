#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "facetda/error.hpp"
#include "facetda/landmarks.hpp"

namespace facetda {

enum class Metricity { metric, nonmetric };

/// Symmetric, zero-diagonal, non-negative dissimilarities between n items.
template <typename Scalar>
struct DistanceMatrixX {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix values;
  Metricity metricity = Metricity::metric;

  Eigen::Index size() const { return values.rows(); }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

using DistanceMatrix = DistanceMatrixX<double>;

/// Checks shape, symmetry, zero diagonal, finiteness and non-negativity.
template <typename Scalar>
void validate_structure(const DistanceMatrixX<Scalar>& dm) {
  const auto n = dm.values.rows();
  if (n == 0 || dm.values.cols() != n) throw ValidationError("distance matrix must be square and non-empty");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (dm.values(i, i) != Scalar(0)) throw ValidationError("distance matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < i; ++j) {
      const Scalar v = dm.values(i, j);
      if (!std::isfinite(v) || v < Scalar(0)) throw ValidationError("distance matrix entries must be finite and >= 0");
      if (v != dm.values(j, i)) throw ValidationError("distance matrix must be symmetric");
    }
  }
}

/// validate_structure, plus the triangle inequality for metric matrices:
/// every triple up to n = 60, a fixed pseudo-random sample of triples above.
template <typename Scalar>
void validate(const DistanceMatrixX<Scalar>& dm, Scalar tol = Scalar(1e-9)) {
  validate_structure(dm);
  const auto n = dm.values.rows();
  if (dm.metricity != Metricity::metric || n < 3) return;
  auto check = [&](Eigen::Index i, Eigen::Index j, Eigen::Index k) {
    const Scalar scale = std::max({dm.values(i, j), dm.values(j, k), dm.values(i, k), Scalar(1)});
    if (dm.values(i, k) > dm.values(i, j) + dm.values(j, k) + tol * scale)
      throw ValidationError("metric distance matrix violates the triangle inequality");
  };
  if (n <= 60) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) check(i, j, k);
    return;
  }
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  auto next = [&]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<Eigen::Index>(state % static_cast<std::uint64_t>(n));
  };
  for (int s = 0; s < 20000; ++s) check(next(), next(), next());
}

/// Pairwise Euclidean distances between the rows of `points` (n x 3).
template <typename Derived>
DistanceMatrixX<typename Derived::Scalar> point_distance_matrix(const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  const auto n = points.rows();
  if (n == 0) throw ValidationError("point_distance_matrix needs at least one point");
  if (!points.allFinite()) throw ValidationError("non-finite coordinate");
  DistanceMatrixX<Scalar> dm;
  dm.metricity = Metricity::metric;
  dm.values.setZero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const Scalar d = (points.row(i) - points.row(j)).norm();
      dm.values(i, j) = d;
      dm.values(j, i) = d;
    }
  return dm;
}

/// Minimum Euclidean distance between segments [a0, a1] and [b0, b1].
///
/// Closed-form clamped parametric solution. Zero-length segments are points.
/// Near-parallel pairs (|d1 x d2|^2 <= 1e-12 |d1|^2 |d2|^2) fix the first
/// parameter at 0 and let the clamping passes find the nearest pair.
template <typename DerivedA0, typename DerivedA1, typename DerivedB0, typename DerivedB1>
typename DerivedA0::Scalar segment_segment_distance(const Eigen::MatrixBase<DerivedA0>& a0,
                                                    const Eigen::MatrixBase<DerivedA1>& a1,
                                                    const Eigen::MatrixBase<DerivedB0>& b0,
                                                    const Eigen::MatrixBase<DerivedB1>& b1) {
  using Scalar = typename DerivedA0::Scalar;
  using Vec = Eigen::Matrix<Scalar, 3, 1>;
  auto vec3 = [](const auto& x) { return Vec(x(0), x(1), x(2)); };
  const Vec p = vec3(a0);
  const Vec u = vec3(a1) - p;
  const Vec q = vec3(b0);
  const Vec v = vec3(b1) - q;
  const Vec w = p - q;

  const Scalar a = u.dot(u);
  const Scalar e = v.dot(v);
  const Scalar f = v.dot(w);
  Scalar s = 0, t = 0;

  if (a <= Scalar(0) && e <= Scalar(0)) return w.norm();
  if (a <= Scalar(0)) {
    t = std::clamp(f / e, Scalar(0), Scalar(1));
  } else {
    const Scalar c = u.dot(w);
    if (e <= Scalar(0)) {
      s = std::clamp(-c / a, Scalar(0), Scalar(1));
    } else {
      const Scalar b = u.dot(v);
      const Scalar denom = a * e - b * b;
      s = denom > Scalar(1e-12) * a * e ? std::clamp((b * f - c * e) / denom, Scalar(0), Scalar(1))
                                        : Scalar(0);
      t = (b * s + f) / e;
      if (t < Scalar(0)) {
        t = 0;
        s = std::clamp(-c / a, Scalar(0), Scalar(1));
      } else if (t > Scalar(1)) {
        t = 1;
        s = std::clamp((b - c) / a, Scalar(0), Scalar(1));
      }
    }
  }
  return (w + s * u - t * v).norm();
}

/// Segment-segment distances between the given landmark edges. The result is
/// tagged non-metric: edges sharing an endpoint are at distance zero and the
/// triangle inequality need not hold.
template <typename Derived>
DistanceMatrixX<typename Derived::Scalar> edge_distance_matrix(const Eigen::MatrixBase<Derived>& points,
                                                               const std::vector<Edge>& edges) {
  using Scalar = typename Derived::Scalar;
  const auto m = static_cast<Eigen::Index>(edges.size());
  if (m == 0) throw ValidationError("edge_distance_matrix needs at least one edge");
  for (const auto& [a, b] : edges)
    if (a < 0 || b < 0 || a >= points.rows() || b >= points.rows())
      throw ValidationError("edge index out of range");
  if (!points.allFinite()) throw ValidationError("non-finite coordinate");
  DistanceMatrixX<Scalar> dm;
  dm.metricity = Metricity::nonmetric;
  dm.values.setZero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const auto& ei = edges[static_cast<std::size_t>(i)];
      const auto& ej = edges[static_cast<std::size_t>(j)];
      const Scalar d = segment_segment_distance(points.row(ei[0]), points.row(ei[1]),
                                                points.row(ej[0]), points.row(ej[1]));
      dm.values(i, j) = d;
      dm.values(j, i) = d;
    }
  return dm;
}

inline DistanceMatrix edge_distance_matrix(const FacialPose& pose, const std::vector<Edge>& edges) {
  return edge_distance_matrix(pose.points, edges);
}

/// Interpolates every edge with ceil(length / epsilon) uniform intervals and
/// returns the samples in first-seen order, dropping exact coordinate
/// duplicates (shared endpoints, collapsed edges).
template <typename Derived>
PointsX<typename Derived::Scalar> supersample(const Eigen::MatrixBase<Derived>& points,
                                              const std::vector<Edge>& edges,
                                              typename Derived::Scalar epsilon) {
  using Scalar = typename Derived::Scalar;
  using Row = Eigen::Matrix<Scalar, 1, 3>;
  if (!(epsilon > Scalar(0)) || !std::isfinite(epsilon)) throw ParameterError("epsilon must be positive");

  std::map<std::array<Scalar, 3>, int> seen;
  std::vector<Row> out;
  auto emit = [&](const Row& p) {
    if (seen.emplace(std::array<Scalar, 3>{p(0), p(1), p(2)}, static_cast<int>(out.size())).second)
      out.push_back(p);
  };
  for (const auto& [ia, ib] : edges) {
    const Row a = points.row(ia);
    const Row b = points.row(ib);
    const Scalar len = (b - a).norm();
    // The (1 - 1e-12) factor keeps exact multiples of epsilon from gaining an
    // extra interval through rounding.
    const long intervals =
        std::max(1L, static_cast<long>(std::ceil(len / epsilon * (Scalar(1) - Scalar(1e-12)))));
    emit(a);
    for (long k = 1; k < intervals; ++k) emit(a + (b - a) * (Scalar(k) / Scalar(intervals)));
    emit(b);
  }
  PointsX<Scalar> result(static_cast<Eigen::Index>(out.size()), 3);
  for (std::size_t k = 0; k < out.size(); ++k) result.row(static_cast<Eigen::Index>(k)) = out[k];
  return result;
}

}  // namespace facetda
