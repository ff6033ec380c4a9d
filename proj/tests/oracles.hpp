#pragma once

// Independent reference implementations used only by the tests. None of them
// share code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace oracle {

using Diagram = std::vector<std::pair<double, double>>;

// Rank over GF(2) of a 0/1 matrix given as rows of bitsets (vector<char>).
inline int gf2_rank(std::vector<std::vector<char>> rows) {
  int rank = 0;
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  for (std::size_t c = 0; c < cols && rank < static_cast<int>(rows.size()); ++c) {
    std::size_t pivot = rows.size();
    for (std::size_t r = static_cast<std::size_t>(rank); r < rows.size(); ++r)
      if (rows[r][c]) {
        pivot = r;
        break;
      }
    if (pivot == rows.size()) continue;
    std::swap(rows[pivot], rows[static_cast<std::size_t>(rank)]);
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (r != static_cast<std::size_t>(rank) && rows[r][c])
        for (std::size_t k = c; k < cols; ++k) rows[r][k] ^= rows[static_cast<std::size_t>(rank)][k];
    ++rank;
  }
  return rank;
}

struct Betti {
  int b0 = 0;
  int b1 = 0;
};

// Betti numbers of the Rips 2-skeleton at scale r: a simplex is present when
// all its pairwise dissimilarities are <= r.
inline Betti rips_betti(const Eigen::MatrixXd& dm, double r) {
  const int n = static_cast<int>(dm.rows());
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (dm(i, j) <= r) edges.emplace_back(i, j);
  std::vector<std::array<int, 3>> triangles;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        if (dm(i, j) <= r && dm(i, k) <= r && dm(j, k) <= r) triangles.push_back({i, j, k});

  // d1: edges -> vertices (rows = edges), d2: triangles -> edges (rows = triangles).
  std::vector<std::vector<char>> d1(edges.size(), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    d1[e][static_cast<std::size_t>(edges[e].first)] = 1;
    d1[e][static_cast<std::size_t>(edges[e].second)] = 1;
  }
  auto edge_index = [&](int a, int b) {
    return static_cast<std::size_t>(
        std::find(edges.begin(), edges.end(), std::make_pair(a, b)) - edges.begin());
  };
  std::vector<std::vector<char>> d2(triangles.size(), std::vector<char>(edges.size(), 0));
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto [a, b, c] = triangles[t];
    d2[t][edge_index(a, b)] = 1;
    d2[t][edge_index(a, c)] = 1;
    d2[t][edge_index(b, c)] = 1;
  }
  const int rank1 = gf2_rank(d1);
  const int rank2 = gf2_rank(d2);
  return {n - rank1, static_cast<int>(edges.size()) - rank1 - rank2};
}

// Kruskal with its own union-find.
inline std::vector<double> mst_weights(const Eigen::MatrixXd& dm) {
  const int n = static_cast<int>(dm.rows());
  std::vector<std::tuple<double, int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(dm(i, j), i, j);
  std::sort(edges.begin(), edges.end());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    return parent[static_cast<std::size_t>(x)] == x ? x : parent[static_cast<std::size_t>(x)] = find(parent[static_cast<std::size_t>(x)]);
  };
  std::vector<double> out;
  for (const auto& [w, i, j] : edges) {
    const int a = find(i), b = find(j);
    if (a == b) continue;
    parent[static_cast<std::size_t>(a)] = b;
    out.push_back(w);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double linf(const std::pair<double, double>& a, const std::pair<double, double>& b) {
  return std::max(std::abs(a.first - b.first), std::abs(a.second - b.second));
}

inline double to_diagonal(const std::pair<double, double>& p) { return (p.second - p.first) / 2.0; }

// Every partial injection X -> Y; unmatched points of either side go to the
// diagonal. Returns {bottleneck, wasserstein1}.
inline std::pair<double, double> enumerate_matchings(const Diagram& x, const Diagram& y) {
  double best_max = std::numeric_limits<double>::infinity();
  double best_sum = std::numeric_limits<double>::infinity();
  std::vector<char> used(y.size(), 0);
  std::function<void(std::size_t, double, double)> rec = [&](std::size_t i, double mx, double sum) {
    if (i == x.size()) {
      for (std::size_t j = 0; j < y.size(); ++j)
        if (!used[j]) {
          mx = std::max(mx, to_diagonal(y[j]));
          sum += to_diagonal(y[j]);
        }
      best_max = std::min(best_max, mx);
      best_sum = std::min(best_sum, sum);
      return;
    }
    rec(i + 1, std::max(mx, to_diagonal(x[i])), sum + to_diagonal(x[i]));
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      const double c = linf(x[i], y[j]);
      rec(i + 1, std::max(mx, c), sum + c);
      used[j] = 0;
    }
  };
  rec(0, 0.0, 0.0);
  return {best_max, best_sum};
}

// All (|X|+|Y|)! bijections of the diagonal-augmented sets. Only for tiny sizes.
inline std::pair<double, double> enumerate_augmented_bijections(const Diagram& x, const Diagram& y) {
  const std::size_t m = x.size(), k = y.size(), n = m + k;
  auto cost = [&](std::size_t r, std::size_t c) {
    if (r < m && c < k) return linf(x[r], y[c]);
    if (r < m) return to_diagonal(x[r]);
    if (c < k) return to_diagonal(y[c]);
    return 0.0;
  };
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best_max = std::numeric_limits<double>::infinity(), best_sum = best_max;
  do {
    double mx = 0.0, sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double c = cost(r, perm[r]);
      mx = std::max(mx, c);
      sum += c;
    }
    best_max = std::min(best_max, mx);
    best_sum = std::min(best_sum, sum);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best_max, best_sum};
}

inline Diagram random_diagram(std::mt19937_64& rng, int max_points) {
  std::uniform_int_distribution<int> count(0, max_points);
  std::uniform_real_distribution<double> birth(0.0, 10.0), pers(0.0, 5.0);
  Diagram d;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const double b = birth(rng);
    d.emplace_back(b, b + pers(rng));
  }
  return d;
}

// Closest distance between two 3D segments by exhaustive (s, t) grid search.
inline double segment_distance_grid(const Eigen::Vector3d& a0, const Eigen::Vector3d& a1, const Eigen::Vector3d& b0,
                                    const Eigen::Vector3d& b1, int steps) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const Eigen::Vector3d p = a0 + (a1 - a0) * (static_cast<double>(i) / steps);
    for (int j = 0; j <= steps; ++j) {
      const Eigen::Vector3d q = b0 + (b1 - b0) * (static_cast<double>(j) / steps);
      best = std::min(best, (p - q).norm());
    }
  }
  return best;
}

// Fraction of the k nearest neighbours (Euclidean, rows of coords) that share
// each point's label, averaged over all points.
inline double knn_purity(const Eigen::MatrixXd& coords, const std::vector<int>& labels, int k) {
  const auto n = coords.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Eigen::Index>> d;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) d.emplace_back((coords.row(i) - coords.row(j)).norm(), j);
    std::sort(d.begin(), d.end());
    int same = 0;
    for (int t = 0; t < k; ++t) same += labels[static_cast<std::size_t>(d[static_cast<std::size_t>(t)].second)] == labels[static_cast<std::size_t>(i)];
    total += static_cast<double>(same) / k;
  }
  return total / static_cast<double>(n);
}

}  // namespace oracle
