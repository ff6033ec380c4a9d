#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "facetda/diagram_distance.hpp"
#include "facetda/embedding.hpp"
#include "facetda/landmarks.hpp"
#include "facetda/persistence.hpp"

namespace facetda {

/// Per-frame diagrams of one sequence under one (mode, subset).
struct DiagramSet {
  FiltrationMode mode = FiltrationMode::metric;
  FeatureSubset subset;
  std::vector<int> frame_ids;
  std::vector<PoseDiagram> frames;
};

// Diagram JSON:
//   {"mode": str, "subset": [region, ...], "max_scale": f,
//    "points": [{"b": f, "d": f | "inf", "dim": 0|1, "gen": [[a, b], ...]}],
//    "vertices": [[landmark] | [landmark, landmark], ...]}
nlohmann::json diagram_to_json(const PoseDiagram& diagram);
PoseDiagram diagram_from_json(const nlohmann::json& doc);

// {"mode": str, "subset": str, "frames": [{"frame": i, "diagram": {...}}]}
nlohmann::json diagram_set_to_json(const DiagramSet& set);
DiagramSet diagram_set_from_json(const nlohmann::json& doc);

// {"ids": [...], "kind": str, "mode": str, "subset": str,
//  "values": strict lower triangle, row-major (row 1: [1,0]; row 2: [2,0],[2,1]; ...)}
nlohmann::json matrix_to_json(const PoseDissimilarityMatrix& matrix);
PoseDissimilarityMatrix matrix_from_json(const nlohmann::json& doc);

// {"method": str, "params": {...}, "fitness": f | null, "coords": [[x(, y)], ...]}
nlohmann::json embedding_to_json(const Embedding& embedding);

// {"frames": [...], "series": [{"au": id, "values": [...]}], "warnings": [...]}
nlohmann::json au_to_json(const AuLoadResult& au);

/// Compact, deterministic text form used for every cached payload.
std::string canonical_dump(const nlohmann::json& doc);

}  // namespace facetda
