#include "facetda/persistence.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace facetda {

std::string_view to_string(FiltrationMode mode) {
  return mode == FiltrationMode::metric ? "metric" : "nonmetric";
}

FiltrationMode filtration_mode_from_string(std::string_view name) {
  if (name == "metric") return FiltrationMode::metric;
  if (name == "nonmetric") return FiltrationMode::nonmetric;
  throw ParameterError("unknown mode '" + std::string(name) + "'");
}

WorkCounters& work_counters() {
  static WorkCounters counters;
  return counters;
}

bool filtration_less(const Simplex& a, const Simplex& b) {
  if (a.value != b.value) return a.value < b.value;
  if (a.dim != b.dim) return a.dim < b.dim;
  return std::lexicographical_compare(a.vertices.begin(), a.vertices.begin() + a.dim + 1,
                                      b.vertices.begin(), b.vertices.begin() + b.dim + 1);
}

std::vector<PersistencePoint> PersistenceDiagram::in_dimension(int dim) const {
  std::vector<PersistencePoint> out;
  for (const auto& p : points)
    if (p.dim == dim) out.push_back(p);
  return out;
}

std::size_t PersistenceDiagram::count(int dim) const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [&](const auto& p) { return p.dim == dim; }));
}

std::size_t PersistenceDiagram::positive_count(int dim) const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [&](const auto& p) {
    return p.dim == dim && !p.zero_persistence();
  }));
}

namespace {

using Column = std::vector<int>;  // ascending row positions, GF(2)

void add_mod2(Column& target, const Column& source) {
  Column out;
  out.reserve(target.size() + source.size());
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                std::back_inserter(out));
  target.swap(out);
}

double max_entry(const DistanceMatrix& dm) { return dm.values.size() ? dm.values.maxCoeff() : 0.0; }

void sort_points(std::vector<PersistencePoint>& points) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return std::tie(a.dim, a.birth, a.death, a.generator) <
           std::tie(b.dim, b.birth, b.death, b.generator);
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Explicit route
// ---------------------------------------------------------------------------

Filtration build_rips_filtration(const DistanceMatrix& dm, FiltrationMode mode) {
  validate_structure(dm);
  const int n = static_cast<int>(dm.size());
  Filtration f;
  f.mode = mode;
  f.n_vertices = n;
  const auto nn = static_cast<std::size_t>(n);
  f.simplices.reserve(nn + nn * (nn - 1) / 2 + nn * (nn - 1) * (nn - 2) / 6);
  for (int i = 0; i < n; ++i) f.simplices.push_back({0, {i, 0, 0}, 0.0});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) f.simplices.push_back({1, {i, j, 0}, dm(i, j)});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        f.simplices.push_back({2, {i, j, k}, std::max({dm(i, j), dm(i, k), dm(j, k)})});
  std::sort(f.simplices.begin(), f.simplices.end(), filtration_less);
  return f;
}

PersistenceDiagram compute_persistence(const Filtration& f) {
  ++work_counters().reductions;
  const int n = f.n_vertices;
  const auto& S = f.simplices;

  std::vector<int> vertex_pos(static_cast<std::size_t>(n), -1);
  std::unordered_map<long long, int> edge_pos;
  auto edge_key = [n](int a, int b) { return static_cast<long long>(a) * n + b; };
  double max_scale = 0.0;
  for (int p = 0; p < static_cast<int>(S.size()); ++p) {
    const auto& s = S[p];
    if (s.dim == 0) vertex_pos[s.vertices[0]] = p;
    if (s.dim == 1) {
      edge_pos[edge_key(s.vertices[0], s.vertices[1])] = p;
      max_scale = std::max(max_scale, s.value);
    }
  }

  // Triangles: pivot row (edge position) -> owning triangle position.
  std::unordered_map<int, int> edge_owner;
  std::unordered_map<int, Column> reduced;
  for (int p = 0; p < static_cast<int>(S.size()); ++p) {
    const auto& s = S[p];
    if (s.dim != 2) continue;
    const auto [a, b, c] = s.vertices;
    Column col = {edge_pos.at(edge_key(a, b)), edge_pos.at(edge_key(a, c)), edge_pos.at(edge_key(b, c))};
    std::sort(col.begin(), col.end());
    while (!col.empty()) {
      auto it = edge_owner.find(col.back());
      if (it == edge_owner.end()) break;
      add_mod2(col, reduced.at(it->second));
    }
    if (col.empty()) continue;
    edge_owner.emplace(col.back(), p);
    reduced.emplace(p, std::move(col));
  }

  std::vector<PersistencePoint> points;
  auto edge_of = [&](int pos) { return Edge{S[pos].vertices[0], S[pos].vertices[1]}; };

  // Edges, skipping the ones already known to be cycles.
  std::unordered_map<int, int> vertex_owner;
  std::unordered_map<int, Column> reduced_edges;
  for (int p = 0; p < static_cast<int>(S.size()); ++p) {
    const auto& s = S[p];
    if (s.dim != 1 || edge_owner.count(p)) continue;
    Column col = {vertex_pos[s.vertices[0]], vertex_pos[s.vertices[1]]};
    std::sort(col.begin(), col.end());
    while (!col.empty()) {
      auto it = vertex_owner.find(col.back());
      if (it == vertex_owner.end()) break;
      add_mod2(col, reduced_edges.at(it->second));
    }
    if (col.empty()) {
      points.push_back({1, s.value, kInfinity, {}});  // never filled
      continue;
    }
    vertex_owner.emplace(col.back(), p);
    points.push_back({0, S[col.back()].value, s.value, {edge_of(p)}});
    reduced_edges.emplace(p, std::move(col));
  }
  for (int v = 0; v < n; ++v)
    if (!vertex_owner.count(vertex_pos[v])) points.push_back({0, S[vertex_pos[v]].value, kInfinity, {}});

  for (const auto& [edge, tri] : edge_owner) {
    PersistencePoint pt{1, S[edge].value, S[tri].value, {}};
    for (int row : reduced.at(tri)) pt.generator.push_back(edge_of(row));
    points.push_back(std::move(pt));
  }

  sort_points(points);
  return PersistenceDiagram{f.mode, std::move(points), max_scale};
}

// ---------------------------------------------------------------------------
// Implicit route
// ---------------------------------------------------------------------------

namespace {

struct Triangle {
  double value;
  std::uint64_t code;  // (a * n + b) * n + c with a < b < c; orders lexicographically

  friend bool operator<(const Triangle& x, const Triangle& y) {
    return x.value < y.value || (x.value == y.value && x.code < y.code);
  }
};

// Min-heap on filtration order.
struct LaterFirst {
  bool operator()(const Triangle& x, const Triangle& y) const { return y < x; }
};
using CoboundaryHeap = std::priority_queue<Triangle, std::vector<Triangle>, LaterFirst>;

class RipsReducer {
 public:
  RipsReducer(const DistanceMatrix& dm, FiltrationMode mode) : dm_(dm), mode_(mode), n_(static_cast<int>(dm.size())) {
    for (int a = 0; a < n_; ++a)
      for (int b = a + 1; b < n_; ++b) edges_.push_back({dm_(a, b), a, b});
    std::sort(edges_.begin(), edges_.end(), [](const auto& x, const auto& y) {
      return std::tie(x.value, x.a, x.b) < std::tie(y.value, y.a, y.b);
    });
    edge_rank_.assign(static_cast<std::size_t>(n_) * n_, -1);
    for (int r = 0; r < static_cast<int>(edges_.size()); ++r)
      edge_rank_[key(edges_[r].a, edges_[r].b)] = r;
  }

  PersistenceDiagram run(const PersistenceOptions& options) {
    std::vector<PersistencePoint> points;
    const auto negative = components(points);
    cohomology(negative, points);
    emit_pairs(points, options.generators);
    sort_points(points);
    return PersistenceDiagram{mode_, std::move(points), max_entry(dm_)};
  }

 private:
  struct EdgeRec {
    double value;
    int a, b;
  };

  std::size_t key(int a, int b) const { return static_cast<std::size_t>(a) * n_ + b; }

  Triangle triangle(int a, int b, int c) const {
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    const auto n = static_cast<std::uint64_t>(n_);
    return {std::max({dm_(a, b), dm_(a, c), dm_(b, c)}),
            (static_cast<std::uint64_t>(a) * n + static_cast<std::uint64_t>(b)) * n + static_cast<std::uint64_t>(c)};
  }

  std::array<int, 3> vertices(std::uint64_t code) const {
    const auto n = static_cast<std::uint64_t>(n_);
    return {static_cast<int>(code / (n * n)), static_cast<int>((code / n) % n), static_cast<int>(code % n)};
  }

  void push_coboundary(CoboundaryHeap& heap, int rank) const {
    const auto& e = edges_[rank];
    for (int k = 0; k < n_; ++k)
      if (k != e.a && k != e.b) heap.push(triangle(e.a, e.b, k));
  }

  static std::optional<Triangle> pivot(CoboundaryHeap& heap) {
    while (!heap.empty()) {
      const Triangle t = heap.top();
      heap.pop();
      if (!heap.empty() && heap.top().code == t.code) {
        heap.pop();
        continue;
      }
      heap.push(t);
      return t;
    }
    return std::nullopt;
  }

  // Union-find over edges in filtration order; merging edges kill H0 classes.
  std::vector<bool> components(std::vector<PersistencePoint>& points) const {
    std::vector<int> parent(static_cast<std::size_t>(n_));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::vector<bool> negative(edges_.size(), false);
    for (std::size_t r = 0; r < edges_.size(); ++r) {
      const auto& e = edges_[r];
      int ra = find(e.a), rb = find(e.b);
      if (ra == rb) continue;
      if (ra < rb) std::swap(ra, rb);
      parent[ra] = rb;
      negative[r] = true;
      points.push_back({0, 0.0, e.value, {Edge{e.a, e.b}}});
    }
    points.push_back({0, 0.0, kInfinity, {}});
    return negative;
  }

  // Coboundary reduction of the positive edge columns, latest edge first.
  void cohomology(const std::vector<bool>& negative, std::vector<PersistencePoint>& points) {
    std::unordered_map<int, std::vector<int>> combos;  // non-trivial column combinations
    for (int r = static_cast<int>(edges_.size()) - 1; r >= 0; --r) {
      if (negative[r]) continue;
      const auto& e = edges_[r];

      std::optional<Triangle> best;
      for (int k = 0; k < n_; ++k) {
        if (k == e.a || k == e.b) continue;
        const Triangle t = triangle(e.a, e.b, k);
        if (!best || t < *best) best = t;
      }
      if (best && !owner_.count(best->code)) {
        claim(r, *best);
        continue;
      }

      CoboundaryHeap heap;
      push_coboundary(heap, r);
      std::vector<int> combo = {r};
      for (;;) {
        const auto p = pivot(heap);
        if (!p) {
          points.push_back({1, e.value, kInfinity, {}});
          break;
        }
        auto it = owner_.find(p->code);
        if (it == owner_.end()) {
          claim(r, *p);
          if (combo.size() > 1) combos.emplace(r, std::move(combo));
          break;
        }
        const int other = it->second;
        auto cit = combos.find(other);
        const std::vector<int> single = {other};
        const auto& other_combo = cit == combos.end() ? single : cit->second;
        for (int q : other_combo) push_coboundary(heap, q);
        std::vector<int> merged;
        std::set_symmetric_difference(combo.begin(), combo.end(), other_combo.begin(), other_combo.end(),
                                      std::back_inserter(merged));
        combo.swap(merged);
      }
    }
  }

  void claim(int rank, const Triangle& t) {
    owner_.emplace(t.code, rank);
    paired_triangle_.emplace(rank, t.code);
  }

  Column boundary(std::uint64_t code) const {
    const auto [a, b, c] = vertices(code);
    Column col = {edge_rank_[key(a, b)], edge_rank_[key(a, c)], edge_rank_[key(b, c)]};
    std::sort(col.begin(), col.end());
    return col;
  }

  // Reduced homology column of a paired triangle. Columns are reduced exactly
  // as in left-to-right reduction, but only the ones this column depends on.
  const Column& reduced_column(std::uint64_t target) {
    if (auto it = cycles_.find(target); it != cycles_.end()) return it->second;
    struct Frame {
      std::uint64_t code;
      Column col;
    };
    std::vector<Frame> stack;
    stack.push_back({target, boundary(target)});
    while (!stack.empty()) {
      const std::size_t top = stack.size() - 1;
      const int expected = owner_.at(stack[top].code);
      bool suspended = false;
      while (!suspended) {
        if (stack[top].col.empty()) throw std::logic_error("cycle reduction emptied a paired column");
        const int low = stack[top].col.back();
        if (low == expected) break;
        const auto pit = paired_triangle_.find(low);
        if (pit == paired_triangle_.end()) throw std::logic_error("cycle reduction hit an unpaired edge");
        if (auto cit = cycles_.find(pit->second); cit != cycles_.end()) {
          add_mod2(stack[top].col, cit->second);
        } else {
          stack.push_back({pit->second, boundary(pit->second)});
          suspended = true;
        }
      }
      if (suspended) continue;
      cycles_.emplace(stack[top].code, std::move(stack[top].col));
      stack.pop_back();
    }
    return cycles_.at(target);
  }

  void emit_pairs(std::vector<PersistencePoint>& points, bool generators) {
    for (const auto& [rank, code] : paired_triangle_) {
      PersistencePoint pt{1, edges_[rank].value, triangle_value(code), {}};
      if (generators)
        for (int row : reduced_column(code)) pt.generator.push_back(Edge{edges_[row].a, edges_[row].b});
      points.push_back(std::move(pt));
    }
  }

  double triangle_value(std::uint64_t code) const {
    const auto [a, b, c] = vertices(code);
    return std::max({dm_(a, b), dm_(a, c), dm_(b, c)});
  }

  const DistanceMatrix& dm_;
  FiltrationMode mode_;
  int n_;
  std::vector<EdgeRec> edges_;
  std::vector<int> edge_rank_;
  std::unordered_map<std::uint64_t, int> owner_;            // triangle -> edge rank
  std::unordered_map<int, std::uint64_t> paired_triangle_;  // edge rank -> triangle
  std::unordered_map<std::uint64_t, Column> cycles_;
};

}  // namespace

PersistenceDiagram rips_persistence(const DistanceMatrix& dm, FiltrationMode mode,
                                    const PersistenceOptions& options) {
  validate_structure(dm);
  ++work_counters().reductions;
  return RipsReducer(dm, mode).run(options);
}

PoseDiagram diagram_for_pose(const FacialPose& pose, const LandmarkConnectivity& conn,
                             const FeatureSubset& subset, FiltrationMode mode,
                             const PersistenceOptions& options) {
  validate(pose);
  const auto sel = select_subset(pose, conn, subset);
  PoseDiagram out;
  out.subset = subset;
  if (mode == FiltrationMode::metric) {
    out.diagram = rips_persistence(point_distance_matrix(sel.points), mode, options);
    for (int id : sel.landmark_ids) out.vertex_landmarks.push_back({id});
  } else {
    if (sel.edges.empty()) throw ValidationError("feature subset '" + subset.name() + "' has no edges");
    out.diagram = rips_persistence(edge_distance_matrix(sel.points, sel.edges), mode, options);
    for (const auto& [a, b] : sel.edges) out.vertex_landmarks.push_back({sel.landmark_ids[a], sel.landmark_ids[b]});
  }
  return out;
}

}  // namespace facetda
