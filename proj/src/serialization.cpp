#include "facetda/serialization.hpp"

namespace facetda {

using nlohmann::json;

std::string canonical_dump(const json& doc) { return doc.dump(); }

namespace {

json edges_to_json(const std::vector<Edge>& edges) {
  json out = json::array();
  for (const auto& [a, b] : edges) out.push_back({a, b});
  return out;
}

std::vector<Edge> edges_from_json(const json& doc) {
  std::vector<Edge> out;
  for (const auto& e : doc) out.push_back(Edge{e.at(0).get<int>(), e.at(1).get<int>()});
  return out;
}

json subset_to_json(const FeatureSubset& subset) {
  json out = json::array();
  for (Region r : subset.regions()) out.push_back(std::string(to_string(r)));
  return out;
}

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json diagram_to_json(const PoseDiagram& pd) {
  json points = json::array();
  for (const auto& p : pd.diagram.points) {
    json jp = {{"b", p.birth}, {"dim", p.dim}, {"gen", edges_to_json(p.generator)}};
    jp["d"] = p.essential() ? json("inf") : json(p.death);
    points.push_back(std::move(jp));
  }
  return json{{"mode", std::string(to_string(pd.diagram.mode))},
              {"subset", subset_to_json(pd.subset)},
              {"max_scale", pd.diagram.max_scale},
              {"points", std::move(points)},
              {"vertices", pd.vertex_landmarks}};
}

PoseDiagram diagram_from_json(const json& doc) {
  return guarded("diagram json", [&] {
    PoseDiagram pd;
    pd.diagram.mode = filtration_mode_from_string(doc.at("mode").get<std::string>());
    for (const auto& r : doc.at("subset")) pd.subset.insert(region_from_string(r.get<std::string>()));
    pd.diagram.max_scale = doc.at("max_scale").get<double>();
    for (const auto& jp : doc.at("points")) {
      PersistencePoint p;
      p.dim = jp.at("dim").get<int>();
      p.birth = jp.at("b").get<double>();
      const auto& d = jp.at("d");
      p.death = d.is_string() ? kInfinity : d.get<double>();
      p.generator = edges_from_json(jp.at("gen"));
      pd.diagram.points.push_back(std::move(p));
    }
    if (doc.contains("vertices")) pd.vertex_landmarks = doc.at("vertices").get<std::vector<std::vector<int>>>();
    return pd;
  });
}

json diagram_set_to_json(const DiagramSet& set) {
  json frames = json::array();
  for (std::size_t k = 0; k < set.frames.size(); ++k)
    frames.push_back({{"frame", set.frame_ids[k]}, {"diagram", diagram_to_json(set.frames[k])}});
  return json{{"mode", std::string(to_string(set.mode))}, {"subset", set.subset.name()}, {"frames", std::move(frames)}};
}

DiagramSet diagram_set_from_json(const json& doc) {
  return guarded("diagram set json", [&] {
    DiagramSet set;
    set.mode = filtration_mode_from_string(doc.at("mode").get<std::string>());
    set.subset = FeatureSubset::parse(doc.at("subset").get<std::string>());
    for (const auto& f : doc.at("frames")) {
      set.frame_ids.push_back(f.at("frame").get<int>());
      set.frames.push_back(diagram_from_json(f.at("diagram")));
    }
    return set;
  });
}

json matrix_to_json(const PoseDissimilarityMatrix& m) {
  json values = json::array();
  for (Eigen::Index i = 1; i < m.values.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) values.push_back(m.values(i, j));
  return json{{"ids", m.frame_ids},
              {"kind", std::string(to_string(m.kind))},
              {"mode", std::string(to_string(m.mode))},
              {"subset", m.subset},
              {"values", std::move(values)}};
}

PoseDissimilarityMatrix matrix_from_json(const json& doc) {
  return guarded("matrix json", [&] {
    PoseDissimilarityMatrix m;
    m.frame_ids = doc.at("ids").get<std::vector<int>>();
    m.kind = distance_kind_from_string(doc.at("kind").get<std::string>());
    if (doc.contains("mode")) m.mode = filtration_mode_from_string(doc.at("mode").get<std::string>());
    if (doc.contains("subset")) m.subset = doc.at("subset").get<std::string>();
    const auto n = static_cast<Eigen::Index>(m.frame_ids.size());
    const auto& values = doc.at("values");
    if (values.size() != static_cast<std::size_t>(n * (n - 1) / 2))
      throw FormatError("matrix json: expected " + std::to_string(n * (n - 1) / 2) + " lower-triangle values");
    m.values = Eigen::MatrixXd::Zero(n, n);
    std::size_t k = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j, ++k) m.values(i, j) = m.values(j, i) = values[k].get<double>();
    return m;
  });
}

json embedding_to_json(const Embedding& e) {
  json params = json::object();
  switch (e.method) {
    case EmbeddingMethod::relative: params["keyframe"] = e.keyframe; break;
    case EmbeddingMethod::mds: params["dim"] = e.dim; break;
    case EmbeddingMethod::tsne:
      params["perplexity"] = e.tsne.perplexity;
      params["iterations"] = e.tsne.iterations;
      params["seed"] = e.tsne.seed;
      params["early_exaggeration"] = e.tsne.early_exaggeration;
      params["learning_rate"] = e.tsne.learning_rate;
      break;
  }
  if (e.method == EmbeddingMethod::mds) params["euclidean_deficit"] = e.euclidean_deficit;
  json coords = json::array();
  for (Eigen::Index i = 0; i < e.coords.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < e.coords.cols(); ++c) row.push_back(e.coords(i, c));
    coords.push_back(std::move(row));
  }
  return json{{"method", std::string(to_string(e.method))},
              {"params", std::move(params)},
              {"fitness", e.fitness ? json(*e.fitness) : json(nullptr)},
              {"coords", std::move(coords)}};
}

json au_to_json(const AuLoadResult& au) {
  json series = json::array();
  for (const auto& s : au.series) series.push_back({{"au", s.au_id}, {"values", s.intensities}});
  return json{{"frames", au.frames}, {"series", std::move(series)}, {"warnings", au.warnings}};
}

}  // namespace facetda
