#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "facetda/cache.hpp"
#include "facetda/diagram_distance.hpp"
#include "facetda/landmarks.hpp"
#include "facetda/persistence.hpp"
#include "facetda/serialization.hpp"

namespace facetda {

struct PipelineConfig {
  std::filesystem::path data_root;
  std::filesystem::path connectivity;  // empty: built-in default layout
  std::vector<FiltrationMode> modes = {FiltrationMode::metric, FiltrationMode::nonmetric};
  std::vector<FeatureSubset> subsets = subset_presets();
  std::vector<DistanceKind> kinds = {DistanceKind::bottleneck, DistanceKind::wasserstein1};
  std::filesystem::path cache_dir;
  int workers = 1;
};

/// Throws ParameterError for empty mode/subset/kind lists, a missing
/// data_root, or a missing connectivity file.
void validate(const PipelineConfig& config);

struct PipelineReport {
  int sequences = 0;
  int diagram_sets_computed = 0;
  int diagram_sets_cached = 0;
  int matrices_computed = 0;
  int matrices_cached = 0;
  std::uint64_t reductions = 0;  // persistence computations performed
  std::uint64_t matchings = 0;   // diagram matching solves performed
  struct Failure {
    std::string source;
    std::string kind;
    std::string message;
  };
  std::vector<Failure> errors;

  nlohmann::json to_json() const;
};

/// Sequence files (*.json, *.csv) under data_root, excluding *.au.csv, sorted.
/// A sibling "<stem>.au.csv" is ingested as the sequence's AU series.
std::vector<std::filesystem::path> discover_sequences(const std::filesystem::path& data_root);

/// Populates the cache for every (sequence, mode, subset) and every kind.
/// Work units run on `config.workers` threads; artifacts already present are
/// not recomputed.
PipelineReport run_pipeline(const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Cache index
// ---------------------------------------------------------------------------

/// <cache>/index/<subject>/<emotion>.json describes one sequence:
///   {"subject", "emotion", "frames", "frame_ids", "sequence": key,
///    "connectivity": key, "au": key | null,
///    "diagrams": {"<mode>/<subset>": key},
///    "matrices": {"<mode>/<subset>/<kind>": key}}
std::filesystem::path index_path(const std::filesystem::path& cache_dir, const std::string& subject,
                                 const std::string& emotion);

std::string diagram_slot(FiltrationMode mode, const FeatureSubset& subset);
std::string matrix_slot(FiltrationMode mode, const FeatureSubset& subset, DistanceKind kind);

// ---------------------------------------------------------------------------
// Benchmark and supersampling comparison
// ---------------------------------------------------------------------------

struct BenchRow {
  FiltrationMode mode = FiltrationMode::metric;
  double persistence_seconds = 0.0;
  double bottleneck_seconds = 0.0;
  double wasserstein_seconds = 0.0;
  double mean_h0 = 0.0;  // raw counts, zero-persistence pairs included
  double mean_h1 = 0.0;
  double mean_h0_positive = 0.0;
  double mean_h1_positive = 0.0;
};

std::vector<BenchRow> benchmark(const LandmarkSequence& seq, const LandmarkConnectivity& conn,
                                const FeatureSubset& subset, int workers = 1);

nlohmann::json bench_to_json(const std::vector<BenchRow>& rows);
std::string bench_table(const std::vector<BenchRow>& rows);

struct SupersampleRow {
  std::string label;               // "original", "eps=<value>", "nonmetric"
  std::optional<double> epsilon;   // set for supersampled rows
  std::size_t points = 0;          // vertices of the filtration
  double seconds = 0.0;
  std::size_t features = 0;        // raw H0 + H1 count
  std::size_t positive_features = 0;
  double h1_bottleneck_to_finest = 0.0;
  PersistenceDiagram diagram;
};

struct SupersampleReport {
  std::vector<SupersampleRow> rows;
  nlohmann::json to_json() const;
};

/// Rows: original landmarks, one per epsilon (strictly descending, > 0), and
/// the non-metric edge complex. Cycles are not extracted.
SupersampleReport compare_supersampling(const FacialPose& pose, const LandmarkConnectivity& conn,
                                        const FeatureSubset& subset, const std::vector<double>& epsilons);

}  // namespace facetda
