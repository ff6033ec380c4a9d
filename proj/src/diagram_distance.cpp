#include "facetda/diagram_distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <exception>
#include <thread>

namespace facetda {

std::string_view to_string(DistanceKind kind) {
  return kind == DistanceKind::bottleneck ? "bottleneck" : "wasserstein1";
}

DistanceKind distance_kind_from_string(std::string_view name) {
  if (name == "bottleneck") return DistanceKind::bottleneck;
  if (name == "wasserstein1" || name == "wasserstein") return DistanceKind::wasserstein1;
  throw ParameterError("unknown distance kind '" + std::string(name) + "'");
}

DiagramPoints points_of(const PersistenceDiagram& diagram, int dim) {
  DiagramPoints out;
  for (const auto& p : diagram.points)
    if (p.dim == dim) out.emplace_back(p.birth, p.death);
  return out;
}

namespace {

double linf(const std::pair<double, double>& a, const std::pair<double, double>& b) {
  return std::max(std::abs(a.first - b.first), std::abs(a.second - b.second));
}

struct Split {
  DiagramPoints finite;
  std::vector<double> essential_births;
};

Split split(const DiagramPoints& points, bool drop_zero) {
  Split s;
  for (const auto& p : points) {
    if (!std::isfinite(p.first) || std::isnan(p.second) || p.second < p.first)
      throw ValidationError("diagram point must have finite birth and death >= birth");
    if (std::isinf(p.second)) {
      s.essential_births.push_back(p.first);
    } else if (!(drop_zero && p.second == p.first)) {
      s.finite.push_back(p);
    }
  }
  std::sort(s.essential_births.begin(), s.essential_births.end());
  return s;
}

// Essential classes pair up in birth order; returns the per-pair costs.
std::vector<double> essential_costs(const Split& x, const Split& y) {
  if (x.essential_births.size() != y.essential_births.size())
    throw ValidationError("diagrams have different numbers of essential classes (" +
                          std::to_string(x.essential_births.size()) + " vs " +
                          std::to_string(y.essential_births.size()) + ")");
  std::vector<double> costs;
  for (std::size_t k = 0; k < x.essential_births.size(); ++k)
    costs.push_back(std::abs(x.essential_births[k] - y.essential_births[k]));
  return costs;
}

// Hopcroft-Karp maximum matching on a bipartite graph given as left-side
// adjacency lists.
class BipartiteMatcher {
 public:
  BipartiteMatcher(int right, std::vector<std::vector<int>> adj)
      : left_(static_cast<int>(adj.size())), right_(right), adj_(std::move(adj)) {}

  int max_matching() {
    match_row_.assign(left_, -1);
    match_col_.assign(right_, -1);
    int matched = 0;
    while (bfs()) {
      for (int i = 0; i < left_; ++i)
        if (match_row_[i] < 0 && dfs(i)) ++matched;
    }
    return matched;
  }

 private:
  static constexpr int kUnreached = std::numeric_limits<int>::max();

  bool bfs() {
    std::queue<int> queue;
    dist_.assign(left_, kUnreached);
    for (int i = 0; i < left_; ++i)
      if (match_row_[i] < 0) {
        dist_[i] = 0;
        queue.push(i);
      }
    bool found = false;
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop();
      for (int j : adj_[i]) {
        const int next = match_col_[j];
        if (next < 0) {
          found = true;
        } else if (dist_[next] == kUnreached) {
          dist_[next] = dist_[i] + 1;
          queue.push(next);
        }
      }
    }
    return found;
  }

  bool dfs(int i) {
    for (int j : adj_[i]) {
      const int next = match_col_[j];
      if (next < 0 || (dist_[next] == dist_[i] + 1 && dfs(next))) {
        match_row_[i] = j;
        match_col_[j] = i;
        return true;
      }
    }
    dist_[i] = kUnreached;
    return false;
  }

  int left_, right_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> match_row_, match_col_, dist_;
};

bool perfect_within(const Eigen::MatrixXd& cost, double threshold) {
  const int n = static_cast<int>(cost.rows());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (cost(i, j) <= threshold) adj[i].push_back(j);
  return BipartiteMatcher(n, std::move(adj)).max_matching() == n;
}

}  // namespace

Eigen::MatrixXd augmented_cost_matrix(const DiagramPoints& x, const DiagramPoints& y) {
  const auto nx = static_cast<Eigen::Index>(x.size());
  const auto ny = static_cast<Eigen::Index>(y.size());
  const Eigen::Index n = nx + ny;
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) cost(i, j) = linf(x[i], y[j]);
    for (Eigen::Index j = ny; j < n; ++j) cost(i, j) = diagonal_cost(x[i]);
  }
  for (Eigen::Index i = nx; i < n; ++i)
    for (Eigen::Index j = 0; j < ny; ++j) cost(i, j) = diagonal_cost(y[j]);
  return cost;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  // Shortest augmenting paths with row/column potentials (1-based internally).
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double bottleneck_distance(const DiagramPoints& x, const DiagramPoints& y, const MatchingOptions& options) {
  ++work_counters().matchings;
  const auto sx = split(x, options.drop_zero_persistence);
  const auto sy = split(y, options.drop_zero_persistence);
  double essential = 0.0;
  for (double c : essential_costs(sx, sy)) essential = std::max(essential, c);
  if (sx.finite.empty() && sy.finite.empty()) return essential;

  const Eigen::MatrixXd cost = augmented_cost_matrix(sx.finite, sy.finite);
  std::vector<double> candidates(cost.data(), cost.data() + cost.size());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  // Smallest candidate admitting a perfect matching; the largest always does.
  std::size_t lo = 0, hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (perfect_within(cost, candidates[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return std::max(essential, candidates[lo]);
}

double wasserstein1_distance(const DiagramPoints& x, const DiagramPoints& y, const MatchingOptions& options) {
  ++work_counters().matchings;
  const auto sx = split(x, options.drop_zero_persistence);
  const auto sy = split(y, options.drop_zero_persistence);
  double total = 0.0;
  for (double c : essential_costs(sx, sy)) total += c;
  if (sx.finite.empty() && sy.finite.empty()) return total;

  const Eigen::MatrixXd cost = augmented_cost_matrix(sx.finite, sy.finite);
  const auto assignment = solve_assignment(cost);
  double matched = 0.0;
  for (int i = 0; i < static_cast<int>(assignment.size()); ++i) matched += cost(i, assignment[i]);
  return total + matched;
}

bool match_all_within(const DiagramPoints& required, const DiagramPoints& candidates, double threshold) {
  std::vector<std::vector<int>> adj(required.size());
  for (std::size_t i = 0; i < required.size(); ++i)
    for (std::size_t j = 0; j < candidates.size(); ++j)
      if (linf(required[i], candidates[j]) <= threshold) adj[i].push_back(static_cast<int>(j));
  return BipartiteMatcher(static_cast<int>(candidates.size()), std::move(adj)).max_matching() ==
         static_cast<int>(required.size());
}

double diagram_distance(const DiagramPoints& x, const DiagramPoints& y, DistanceKind kind,
                        const MatchingOptions& options) {
  return kind == DistanceKind::bottleneck ? bottleneck_distance(x, y, options)
                                          : wasserstein1_distance(x, y, options);
}

double combined_distance(const DiagramPoints& x0, const DiagramPoints& x1, const DiagramPoints& y0,
                         const DiagramPoints& y1, DistanceKind kind) {
  const double d0 = diagram_distance(x0, y0, kind);
  const double d1 = diagram_distance(x1, y1, kind);
  return kind == DistanceKind::bottleneck ? std::max(d0, d1) : d0 + d1;
}

double combined_distance(const PersistenceDiagram& x, const PersistenceDiagram& y, DistanceKind kind) {
  return combined_distance(points_of(x, 0), points_of(x, 1), points_of(y, 0), points_of(y, 1), kind);
}

PoseDissimilarityMatrix dissimilarity_matrix(const std::vector<PersistenceDiagram>& diagrams,
                                             const std::vector<int>& frame_ids, DistanceKind kind,
                                             int workers) {
  const auto n = static_cast<Eigen::Index>(diagrams.size());
  if (n < 2) throw ParameterError("dissimilarity matrix needs at least 2 frames");
  if (frame_ids.size() != diagrams.size()) throw ParameterError("frame_ids and diagrams differ in length");

  struct Split01 {
    DiagramPoints h0, h1;
  };
  std::vector<Split01> parts;
  parts.reserve(diagrams.size());
  for (const auto& d : diagrams) parts.push_back({points_of(d, 0), points_of(d, 1)});

  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) cells.emplace_back(i, j);

  PoseDissimilarityMatrix out;
  out.frame_ids = frame_ids;
  out.kind = kind;
  out.mode = diagrams.front().mode;
  out.values = Eigen::MatrixXd::Zero(n, n);

  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  std::vector<std::exception_ptr> failures(threads);
  auto solve = [&](std::size_t begin) {
    try {
      for (std::size_t c = begin; c < cells.size(); c += threads) {
        const auto [i, j] = cells[c];
        const double d = combined_distance(parts[i].h0, parts[i].h1, parts[j].h0, parts[j].h1, kind);
        out.values(i, j) = d;
        out.values(j, i) = d;
      }
    } catch (...) {
      failures[begin] = std::current_exception();
    }
  };
  if (threads == 1) {
    solve(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(solve, t);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

}  // namespace facetda
