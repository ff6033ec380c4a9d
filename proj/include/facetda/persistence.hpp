#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "facetda/geometry.hpp"
#include "facetda/landmarks.hpp"

namespace facetda {

enum class FiltrationMode { metric, nonmetric };

std::string_view to_string(FiltrationMode mode);
FiltrationMode filtration_mode_from_string(std::string_view name);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Simplex {
  int dim = 0;
  std::array<int, 3> vertices{};  // first dim + 1 entries, ascending
  double value = 0.0;
};

/// Filtration order: value, then dimension, then lexicographic vertices.
/// Putting lower dimensions first at equal value makes a face precede its
/// cofaces and realises strict inclusion for the non-metric complex.
bool filtration_less(const Simplex& a, const Simplex& b);

struct Filtration {
  std::vector<Simplex> simplices;
  FiltrationMode mode = FiltrationMode::metric;
  int n_vertices = 0;
};

/// Full 2-skeleton Rips filtration: every vertex at 0, every pair at its
/// dissimilarity, every triple at its largest pairwise dissimilarity.
Filtration build_rips_filtration(const DistanceMatrix& dm, FiltrationMode mode);

struct PersistencePoint {
  int dim = 0;
  double birth = 0.0;
  double death = kInfinity;
  /// dim 0: the merging edge (empty for the essential class).
  /// dim 1: a representative cycle as a set of edges.
  std::vector<Edge> generator;

  bool essential() const { return death == kInfinity; }
  double persistence() const { return death - birth; }
  bool zero_persistence() const { return death == birth; }
};

struct PersistenceDiagram {
  FiltrationMode mode = FiltrationMode::metric;
  std::vector<PersistencePoint> points;
  double max_scale = 0.0;

  std::vector<PersistencePoint> in_dimension(int dim) const;
  std::size_t count(int dim) const;
  /// Points with death > birth (essential points included).
  std::size_t positive_count(int dim) const;
};

/// Column reduction of the explicit boundary matrix over GF(2), triangles
/// first and then edges with the triangle pivots cleared. Representative
/// cycles are the reduced triangle columns.
PersistenceDiagram compute_persistence(const Filtration& f);

struct PersistenceOptions {
  bool generators = true;
};

/// Same diagram as compute_persistence(build_rips_filtration(dm, mode)) without
/// materialising the triangles: H0 by union-find, H1 pairs by coboundary
/// reduction with clearing, and representative cycles by lazily reducing only
/// the paired triangle columns that a requested cycle depends on.
PersistenceDiagram rips_persistence(const DistanceMatrix& dm, FiltrationMode mode,
                                    const PersistenceOptions& options = {});

/// Per-vertex provenance of a pose diagram: for the metric mode each vertex is
/// one landmark, for the non-metric mode each vertex is a landmark edge.
struct PoseDiagram {
  PersistenceDiagram diagram;
  FeatureSubset subset;
  std::vector<std::vector<int>> vertex_landmarks;
};

/// select_subset, then point or edge distances, then Rips persistence.
PoseDiagram diagram_for_pose(const FacialPose& pose, const LandmarkConnectivity& conn,
                             const FeatureSubset& subset, FiltrationMode mode,
                             const PersistenceOptions& options = {});

/// Work counters, read by the pipeline to prove cache hits skip computation.
struct WorkCounters {
  std::atomic<std::uint64_t> reductions{0};
  std::atomic<std::uint64_t> matchings{0};

  void reset() {
    reductions = 0;
    matchings = 0;
  }
};

WorkCounters& work_counters();

}  // namespace facetda
