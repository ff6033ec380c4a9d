#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "facetda/persistence.hpp"

namespace facetda {

/// (birth, death) pairs of one homological dimension. Deaths may be infinite.
using DiagramPoints = std::vector<std::pair<double, double>>;

DiagramPoints points_of(const PersistenceDiagram& diagram, int dim);

enum class DistanceKind { bottleneck, wasserstein1 };

std::string_view to_string(DistanceKind kind);
DistanceKind distance_kind_from_string(std::string_view name);

/// L-infinity cost of matching a point to the diagonal.
inline double diagonal_cost(const std::pair<double, double>& p) { return (p.second - p.first) / 2.0; }

/// Square cost matrix of the diagonal-augmented matching problem over the
/// finite points of X and Y. Rows are X then |Y| diagonal slots, columns are
/// Y then |X| diagonal slots; slot-to-slot cells cost 0.
Eigen::MatrixXd augmented_cost_matrix(const DiagramPoints& x, const DiagramPoints& y);

/// Optimal assignment (row -> column) of a square cost matrix, O(n^3).
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

struct MatchingOptions {
  /// Zero-persistence points cannot change either distance; dropping them
  /// only shrinks the matching problem.
  bool drop_zero_persistence = true;
};

/// inf over bijections of the largest L-infinity cost. Essential points match
/// essential points by sorted birth; unequal essential counts throw.
double bottleneck_distance(const DiagramPoints& x, const DiagramPoints& y,
                           const MatchingOptions& options = {});

/// inf over bijections of the summed L-infinity cost.
double wasserstein1_distance(const DiagramPoints& x, const DiagramPoints& y,
                             const MatchingOptions& options = {});

/// True when every point of `required` can be given its own point of
/// `candidates` at L-infinity cost <= threshold (no diagonal matches).
bool match_all_within(const DiagramPoints& required, const DiagramPoints& candidates, double threshold);

double diagram_distance(const DiagramPoints& x, const DiagramPoints& y, DistanceKind kind,
                        const MatchingOptions& options = {});

/// Bottleneck: max over H0 and H1. Wasserstein-1: H0 + H1.
double combined_distance(const DiagramPoints& x0, const DiagramPoints& x1, const DiagramPoints& y0,
                         const DiagramPoints& y1, DistanceKind kind);

double combined_distance(const PersistenceDiagram& x, const PersistenceDiagram& y, DistanceKind kind);

struct PoseDissimilarityMatrix {
  std::vector<int> frame_ids;
  Eigen::MatrixXd values;
  DistanceKind kind = DistanceKind::bottleneck;
  FiltrationMode mode = FiltrationMode::metric;
  std::string subset;
};

/// Every unordered frame pair is solved once; cells are split across
/// `workers` threads and assembled in a fixed order.
PoseDissimilarityMatrix dissimilarity_matrix(const std::vector<PersistenceDiagram>& diagrams,
                                             const std::vector<int>& frame_ids, DistanceKind kind,
                                             int workers = 1);

}  // namespace facetda
