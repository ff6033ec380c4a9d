#include "facetda/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

#include "facetda/geometry.hpp"

namespace facetda {

using nlohmann::json;

namespace {

// Bumped whenever a payload format or algorithm changes meaning.
constexpr std::string_view kFormatVersion = "facetda-v1";

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool is_au_file(const std::filesystem::path& p) {
  const auto name = p.filename().string();
  return name.size() > 7 && name.substr(name.size() - 7) == ".au.csv";
}

std::filesystem::path au_sibling(const std::filesystem::path& p) {
  auto out = p;
  out.replace_extension(".au.csv");
  return out;
}

}  // namespace

void validate(const PipelineConfig& config) {
  if (config.modes.empty()) throw ParameterError("config: no modes selected");
  if (config.subsets.empty()) throw ParameterError("config: no subsets selected");
  if (config.kinds.empty()) throw ParameterError("config: no distance kinds selected");
  for (const auto& s : config.subsets)
    if (s.empty()) throw ParameterError("config: empty feature subset");
  if (config.data_root.empty() || !std::filesystem::is_directory(config.data_root))
    throw ParameterError("config: data_root '" + config.data_root.string() + "' is not a directory");
  if (!config.connectivity.empty() && !std::filesystem::exists(config.connectivity))
    throw ParameterError("config: connectivity '" + config.connectivity.string() + "' does not exist");
  if (config.cache_dir.empty()) throw ParameterError("config: cache_dir is required");
  if (config.workers < 1) throw ParameterError("config: workers must be >= 1");
}

json PipelineReport::to_json() const {
  json errs = json::array();
  for (const auto& e : errors) errs.push_back({{"source", e.source}, {"kind", e.kind}, {"message", e.message}});
  return json{{"sequences", sequences},
              {"diagram_sets", {{"computed", diagram_sets_computed}, {"cached", diagram_sets_cached}}},
              {"matrices", {{"computed", matrices_computed}, {"cached", matrices_cached}}},
              {"counters", {{"reductions", reductions}, {"matchings", matchings}}},
              {"errors", std::move(errs)}};
}

std::vector<std::filesystem::path> discover_sequences(const std::filesystem::path& data_root) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(data_root)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if ((ext == ".json" || ext == ".csv") && !is_au_file(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::filesystem::path index_path(const std::filesystem::path& cache_dir, const std::string& subject,
                                 const std::string& emotion) {
  return cache_dir / "index" / subject / (emotion + ".json");
}

std::string diagram_slot(FiltrationMode mode, const FeatureSubset& subset) {
  return std::string(to_string(mode)) + "/" + subset.name();
}

std::string matrix_slot(FiltrationMode mode, const FeatureSubset& subset, DistanceKind kind) {
  return diagram_slot(mode, subset) + "/" + std::string(to_string(kind));
}

namespace {

struct LoadedSequence {
  std::filesystem::path source;
  LandmarkSequence seq;
  std::string digest;
  std::optional<std::string> au_key;
};

struct Unit {
  std::size_t sequence;
  FiltrationMode mode;
  FeatureSubset subset;
};

struct UnitResult {
  std::string diagram_key;
  std::vector<std::pair<std::string, std::string>> matrices;  // slot, key
  bool diagrams_cached = false;
  int matrices_computed = 0;
  int matrices_cached = 0;
  std::optional<PipelineReport::Failure> failure;
};

DiagramSet compute_diagram_set(const LandmarkSequence& seq, const LandmarkConnectivity& conn,
                               FiltrationMode mode, const FeatureSubset& subset) {
  DiagramSet set;
  set.mode = mode;
  set.subset = subset;
  for (const auto& frame : seq.frames) {
    set.frame_ids.push_back(frame.frame_index);
    set.frames.push_back(diagram_for_pose(frame, conn, subset, mode));
  }
  return set;
}

UnitResult run_unit(const Unit& unit, const LoadedSequence& ls, const LandmarkConnectivity& conn,
                    const std::string& conn_digest, const PipelineConfig& config, const ContentStore& store) {
  UnitResult r;
  const std::string mode(to_string(unit.mode));
  const std::string subset = unit.subset.name();
  r.diagram_key = content_key({kFormatVersion, "diagrams", ls.digest, conn_digest, mode, subset});

  std::optional<DiagramSet> set;
  auto diagrams = [&]() -> const DiagramSet& {
    if (!set) {
      if (auto cached = store.read(r.diagram_key)) {
        set = diagram_set_from_json(json::parse(*cached));
      } else {
        set = compute_diagram_set(ls.seq, conn, unit.mode, unit.subset);
        store.write(r.diagram_key, canonical_dump(diagram_set_to_json(*set)), "diagrams");
      }
    }
    return *set;
  };

  r.diagrams_cached = store.contains(r.diagram_key);
  if (!r.diagrams_cached) diagrams();

  for (DistanceKind kind : config.kinds) {
    const std::string kind_name(to_string(kind));
    const std::string key = content_key({kFormatVersion, "matrix", ls.digest, conn_digest, mode, subset, kind_name});
    r.matrices.emplace_back(matrix_slot(unit.mode, unit.subset, kind), key);
    if (store.contains(key)) {
      ++r.matrices_cached;
      continue;
    }
    const auto& ds = diagrams();
    std::vector<PersistenceDiagram> per_frame;
    for (const auto& pd : ds.frames) per_frame.push_back(pd.diagram);
    if (per_frame.size() < 2) {
      // A single frame has the trivial 1x1 matrix.
      PoseDissimilarityMatrix m{ds.frame_ids, Eigen::MatrixXd::Zero(1, 1), kind, unit.mode, subset};
      store.write(key, canonical_dump(matrix_to_json(m)), "matrix");
    } else {
      auto m = dissimilarity_matrix(per_frame, ds.frame_ids, kind);
      m.subset = subset;
      store.write(key, canonical_dump(matrix_to_json(m)), "matrix");
    }
    ++r.matrices_computed;
  }
  return r;
}

void write_index(const std::filesystem::path& cache_dir, const LoadedSequence& ls, const std::string& seq_key,
                 const std::string& conn_key, const std::vector<const UnitResult*>& units,
                 const std::vector<Unit>& unit_specs) {
  const std::string emotion(to_string(ls.seq.emotion));
  const auto path = index_path(cache_dir, ls.seq.subject_id, emotion);
  json doc;
  if (std::filesystem::exists(path)) {
    try {
      doc = json::parse(read_text(path));
    } catch (const std::exception&) {
      doc = json::object();
    }
  }
  // A different sequence under the same name replaces the entry.
  if (!doc.is_object() || doc.value("sequence", "") != seq_key || doc.value("connectivity", "") != conn_key)
    doc = json::object();
  doc["subject"] = ls.seq.subject_id;
  doc["emotion"] = emotion;
  doc["frames"] = ls.seq.frames.size();
  json ids = json::array();
  for (const auto& f : ls.seq.frames) ids.push_back(f.frame_index);
  doc["frame_ids"] = ids;
  doc["sequence"] = seq_key;
  doc["connectivity"] = conn_key;
  doc["au"] = ls.au_key ? json(*ls.au_key) : json(nullptr);
  if (!doc.contains("diagrams")) doc["diagrams"] = json::object();
  if (!doc.contains("matrices")) doc["matrices"] = json::object();
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (units[k]->failure) continue;
    doc["diagrams"][diagram_slot(unit_specs[k].mode, unit_specs[k].subset)] = units[k]->diagram_key;
    for (const auto& [slot, key] : units[k]->matrices) doc["matrices"][slot] = key;
  }
  const auto text = doc.dump(1);
  if (!std::filesystem::exists(path) || read_text(path) != text) atomic_write(path, text);
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config) {
  validate(config);
  const auto before_reductions = work_counters().reductions.load();
  const auto before_matchings = work_counters().matchings.load();

  const LandmarkConnectivity conn =
      config.connectivity.empty() ? default_connectivity() : load_connectivity(config.connectivity);
  const std::string conn_text = connectivity_to_json(conn);
  const std::string conn_digest = sha256_hex(conn_text);
  const ContentStore store(config.cache_dir);
  const std::string conn_key = content_key({kFormatVersion, "connectivity", conn_digest});
  if (!store.contains(conn_key)) store.write(conn_key, conn_text, "connectivity");

  PipelineReport report;
  std::vector<LoadedSequence> loaded;
  for (const auto& path : discover_sequences(config.data_root)) {
    try {
      LoadedSequence ls;
      ls.source = path;
      ls.seq = load_sequence(path);
      if (ls.seq.landmark_count() != conn.landmark_count())
        throw ValidationError(path.filename().string() + ": " + std::to_string(ls.seq.landmark_count()) +
                              " landmarks, connectivity has " + std::to_string(conn.landmark_count()));
      const std::string text = sequence_to_json(ls.seq);
      ls.digest = sha256_hex(text);
      const std::string seq_key = content_key({kFormatVersion, "sequence", ls.digest});
      if (!store.contains(seq_key)) store.write(seq_key, text, "sequence");
      if (const auto au_path = au_sibling(path); std::filesystem::exists(au_path)) {
        const auto au = load_au_csv(au_path);
        const auto payload = canonical_dump(au_to_json(au));
        ls.au_key = content_key({kFormatVersion, "au", sha256_hex(payload)});
        if (!store.contains(*ls.au_key)) store.write(*ls.au_key, payload, "au");
      }
      loaded.push_back(std::move(ls));
    } catch (const Error& e) {
      report.errors.push_back({path.string(), e.kind(), e.what()});
    } catch (const std::exception& e) {
      report.errors.push_back({path.string(), "io", e.what()});
    }
  }
  report.sequences = static_cast<int>(loaded.size());

  std::vector<Unit> units;
  for (std::size_t s = 0; s < loaded.size(); ++s)
    for (FiltrationMode mode : config.modes)
      for (const auto& subset : config.subsets) units.push_back({s, mode, subset});

  std::vector<UnitResult> results(units.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < units.size(); k = next++) {
      const auto& u = units[k];
      try {
        results[k] = run_unit(u, loaded[u.sequence], conn, conn_digest, config, store);
      } catch (const Error& e) {
        results[k].failure = PipelineReport::Failure{loaded[u.sequence].source.string(), e.kind(), e.what()};
      } catch (const std::exception& e) {
        results[k].failure = PipelineReport::Failure{loaded[u.sequence].source.string(), "internal", e.what()};
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const int threads = std::min<int>(config.workers, static_cast<int>(std::max<std::size_t>(units.size(), 1)));
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  for (std::size_t s = 0; s < loaded.size(); ++s) {
    std::vector<const UnitResult*> mine;
    std::vector<Unit> specs;
    for (std::size_t k = 0; k < units.size(); ++k) {
      if (units[k].sequence != s) continue;
      const auto& r = results[k];
      if (r.failure) {
        report.errors.push_back(*r.failure);
        continue;
      }
      (r.diagrams_cached ? report.diagram_sets_cached : report.diagram_sets_computed)++;
      report.matrices_computed += r.matrices_computed;
      report.matrices_cached += r.matrices_cached;
      mine.push_back(&r);
      specs.push_back(units[k]);
    }
    const auto seq_key = content_key({kFormatVersion, "sequence", loaded[s].digest});
    write_index(config.cache_dir, loaded[s], seq_key, conn_key, mine, specs);
  }

  report.reductions = work_counters().reductions.load() - before_reductions;
  report.matchings = work_counters().matchings.load() - before_matchings;
  return report;
}

// ---------------------------------------------------------------------------

std::vector<BenchRow> benchmark(const LandmarkSequence& seq, const LandmarkConnectivity& conn,
                                const FeatureSubset& subset, int workers) {
  validate(seq);
  std::vector<BenchRow> rows;
  for (FiltrationMode mode : {FiltrationMode::metric, FiltrationMode::nonmetric}) {
    BenchRow row;
    row.mode = mode;
    std::vector<PersistenceDiagram> diagrams;
    std::vector<int> ids;
    auto start = std::chrono::steady_clock::now();
    for (const auto& frame : seq.frames) {
      diagrams.push_back(diagram_for_pose(frame, conn, subset, mode).diagram);
      ids.push_back(frame.frame_index);
    }
    row.persistence_seconds = seconds_since(start);

    const double frames = static_cast<double>(diagrams.size());
    for (const auto& d : diagrams) {
      row.mean_h0 += static_cast<double>(d.count(0)) / frames;
      row.mean_h1 += static_cast<double>(d.count(1)) / frames;
      row.mean_h0_positive += static_cast<double>(d.positive_count(0)) / frames;
      row.mean_h1_positive += static_cast<double>(d.positive_count(1)) / frames;
    }
    if (diagrams.size() >= 2) {
      start = std::chrono::steady_clock::now();
      dissimilarity_matrix(diagrams, ids, DistanceKind::bottleneck, workers);
      row.bottleneck_seconds = seconds_since(start);
      start = std::chrono::steady_clock::now();
      dissimilarity_matrix(diagrams, ids, DistanceKind::wasserstein1, workers);
      row.wasserstein_seconds = seconds_since(start);
    }
    rows.push_back(row);
  }
  return rows;
}

json bench_to_json(const std::vector<BenchRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"mode", std::string(to_string(r.mode))},
                   {"persistence_seconds", r.persistence_seconds},
                   {"bottleneck_seconds", r.bottleneck_seconds},
                   {"wasserstein_seconds", r.wasserstein_seconds},
                   {"mean_h0", r.mean_h0},
                   {"mean_h1", r.mean_h1},
                   {"mean_h0_positive", r.mean_h0_positive},
                   {"mean_h1_positive", r.mean_h1_positive}});
  return out;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %10s %12s %12s %10s %10s %10s %10s\n", "", "PH (s)", "Bottle (s)",
                "Wass (s)", "|H0|", "|H1|", "|H0|>0", "|H1|>0");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-4s %10.3f %12.3f %12.3f %10.1f %10.1f %10.1f %10.1f\n",
                  r.mode == FiltrationMode::metric ? "M" : "NM", r.persistence_seconds, r.bottleneck_seconds,
                  r.wasserstein_seconds, r.mean_h0, r.mean_h1, r.mean_h0_positive, r.mean_h1_positive);
    out << line;
  }
  return out.str();
}

// ---------------------------------------------------------------------------

json SupersampleReport::to_json() const {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"label", r.label},
                   {"epsilon", r.epsilon ? json(*r.epsilon) : json(nullptr)},
                   {"points", r.points},
                   {"seconds", r.seconds},
                   {"features", r.features},
                   {"positive_features", r.positive_features},
                   {"h1_bottleneck_to_finest", r.h1_bottleneck_to_finest}});
  return json{{"rows", std::move(out)}};
}

SupersampleReport compare_supersampling(const FacialPose& pose, const LandmarkConnectivity& conn,
                                        const FeatureSubset& subset, const std::vector<double>& epsilons) {
  if (epsilons.empty()) throw ParameterError("at least one epsilon is required");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] > 0.0)) throw ParameterError("epsilons must be positive");
    if (k > 0 && !(epsilons[k] < epsilons[k - 1])) throw ParameterError("epsilons must be strictly descending");
  }
  const auto sel = select_subset(pose, conn, subset);
  const PersistenceOptions no_cycles{.generators = false};

  SupersampleReport report;
  auto add_row = [&](std::string label, std::optional<double> eps, const DistanceMatrix& dm, FiltrationMode mode,
                     std::chrono::steady_clock::time_point start) {
    SupersampleRow row;
    row.label = std::move(label);
    row.epsilon = eps;
    row.points = static_cast<std::size_t>(dm.size());
    row.diagram = rips_persistence(dm, mode, no_cycles);
    row.seconds = seconds_since(start);
    row.features = row.diagram.points.size();
    row.positive_features = row.diagram.positive_count(0) + row.diagram.positive_count(1);
    report.rows.push_back(std::move(row));
  };

  auto start = std::chrono::steady_clock::now();
  add_row("original", std::nullopt, point_distance_matrix(sel.points), FiltrationMode::metric, start);
  for (double eps : epsilons) {
    start = std::chrono::steady_clock::now();
    const auto samples = supersample(sel.points, sel.edges, eps);
    std::ostringstream label;
    label << "eps=" << eps;
    add_row(label.str(), eps, point_distance_matrix(samples), FiltrationMode::metric, start);
  }
  start = std::chrono::steady_clock::now();
  add_row("nonmetric", std::nullopt, edge_distance_matrix(sel.points, sel.edges), FiltrationMode::nonmetric, start);

  const auto finest = points_of(report.rows[epsilons.size()].diagram, 1);
  for (auto& row : report.rows) row.h1_bottleneck_to_finest = bottleneck_distance(points_of(row.diagram, 1), finest);
  return report;
}

}  // namespace facetda
