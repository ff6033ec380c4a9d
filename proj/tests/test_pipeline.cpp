#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "facetda/error.hpp"
#include "facetda/pipeline.hpp"
#include "support.hpp"

using namespace facetda;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

LandmarkSequence make_sequence(const std::string& subject, Emotion emotion, int frames, std::uint64_t seed = 0) {
  SyntheticSpec spec;
  spec.motion = Motion::mouth_open_close;
  spec.n_frames = frames;
  spec.noise_sd = 0.3;
  spec.seed = seed;
  spec.subject_id = subject;
  spec.emotion = emotion;
  return generate_synthetic(spec);
}

void put_sequence(const fs::path& root, const LandmarkSequence& seq) {
  testing::write_file(root / seq.subject_id / (std::string(to_string(seq.emotion)) + ".json"), sequence_to_json(seq));
}

PipelineConfig small_config(const fs::path& data, const fs::path& cache) {
  PipelineConfig c;
  c.data_root = data;
  c.cache_dir = cache;
  c.modes = {FiltrationMode::nonmetric};
  c.subsets = {FeatureSubset::parse("mouth+nose")};
  c.kinds = {DistanceKind::bottleneck};
  return c;
}

// Relative path -> bytes for every payload and index file (meta sidecars
// carry timestamps and are left out).
std::map<std::string, std::string> snapshot(const fs::path& cache) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(cache)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name.ends_with(".meta.json")) continue;
    out[fs::relative(e.path(), cache).generic_string()] = read_text(e.path());
  }
  return out;
}

json read_index(const fs::path& cache, const std::string& subject, const std::string& emotion) {
  return json::parse(read_text(index_path(cache, subject, emotion)));
}

}  // namespace

TEST_CASE("config validation") {
  testing::TempDir dir;
  auto c = small_config(dir.path(), dir.path() / "cache");
  CHECK_NOTHROW(validate(c));
  auto bad = c;
  bad.modes.clear();
  CHECK_THROWS_AS(validate(bad), ParameterError);
  bad = c;
  bad.kinds.clear();
  CHECK_THROWS_AS(validate(bad), ParameterError);
  bad = c;
  bad.subsets.clear();
  CHECK_THROWS_AS(validate(bad), ParameterError);
  bad = c;
  bad.data_root = dir.path() / "nope";
  CHECK_THROWS_AS(validate(bad), ParameterError);
  bad = c;
  bad.connectivity = dir.path() / "missing.json";
  CHECK_THROWS_AS(validate(bad), ParameterError);
  bad = c;
  bad.cache_dir.clear();
  CHECK_THROWS_AS(validate(bad), ParameterError);
  bad = c;
  bad.workers = 0;
  CHECK_THROWS_AS(validate(bad), ParameterError);
}

TEST_CASE("empty data root processes nothing") {
  testing::TempDir dir;
  fs::create_directories(dir.path() / "data");
  const auto report = run_pipeline(small_config(dir.path() / "data", dir.path() / "cache"));
  CHECK(report.sequences == 0);
  CHECK(report.errors.empty());
  CHECK(report.diagram_sets_computed == 0);
  CHECK(report.matrices_computed == 0);
}

TEST_CASE("sequence discovery") {
  testing::TempDir dir;
  testing::write_file(dir.path() / "b" / "x.csv", "");
  testing::write_file(dir.path() / "a" / "y.json", "");
  testing::write_file(dir.path() / "a" / "y.au.csv", "");
  testing::write_file(dir.path() / "a" / "notes.txt", "");
  const auto found = discover_sequences(dir.path());
  REQUIRE(found.size() == 2);
  CHECK(found[0] == dir.path() / "a" / "y.json");
  CHECK(found[1] == dir.path() / "b" / "x.csv");
}

TEST_CASE("second run hits the cache and does no work") {
  testing::TempDir dir;
  put_sequence(dir.path() / "data", make_sequence("S1", Emotion::happiness, 4));
  const auto c = small_config(dir.path() / "data", dir.path() / "cache");

  const auto first = run_pipeline(c);
  CHECK(first.sequences == 1);
  CHECK(first.diagram_sets_computed == 1);
  CHECK(first.matrices_computed == 1);
  CHECK(first.reductions == 4);
  CHECK(first.matchings > 0);
  const auto before = snapshot(c.cache_dir);

  const auto second = run_pipeline(c);
  CHECK(second.diagram_sets_computed == 0);
  CHECK(second.diagram_sets_cached == 1);
  CHECK(second.matrices_computed == 0);
  CHECK(second.matrices_cached == 1);
  CHECK(second.reductions == 0);
  CHECK(second.matchings == 0);
  CHECK(snapshot(c.cache_dir) == before);

  const auto j = second.to_json();
  CHECK(j.at("counters").at("reductions") == 0);
  CHECK(j.at("diagram_sets").at("cached") == 1);
}

TEST_CASE("a new kind reuses cached diagrams") {
  testing::TempDir dir;
  put_sequence(dir.path() / "data", make_sequence("S1", Emotion::happiness, 3));
  auto c = small_config(dir.path() / "data", dir.path() / "cache");
  run_pipeline(c);
  c.kinds = {DistanceKind::bottleneck, DistanceKind::wasserstein1};
  const auto r = run_pipeline(c);
  CHECK(r.reductions == 0);
  CHECK(r.matrices_computed == 1);
  CHECK(r.matrices_cached == 1);
  CHECK(read_index(c.cache_dir, "S1", "happiness").at("matrices").size() == 2);
}

TEST_CASE("full grid fills every slot of the index") {
  testing::TempDir dir;
  put_sequence(dir.path() / "data", make_sequence("S1", Emotion::surprise, 3));
  PipelineConfig c;
  c.data_root = dir.path() / "data";
  c.cache_dir = dir.path() / "cache";
  c.workers = 3;
  const auto r = run_pipeline(c);
  CHECK(r.diagram_sets_computed == 8);
  CHECK(r.matrices_computed == 16);
  CHECK(r.errors.empty());

  const auto index = read_index(c.cache_dir, "S1", "surprise");
  CHECK(index.at("frames") == 3);
  CHECK(index.at("frame_ids") == json::array({0, 1, 2}));
  CHECK(index.at("au").is_null());
  CHECK(index.at("diagrams").size() == 8);
  CHECK(index.at("matrices").size() == 16);
  const ContentStore store(c.cache_dir);
  for (const auto& [slot, key] : index.at("matrices").items()) {
    const auto m = matrix_from_json(json::parse(*store.read(key.get<std::string>())));
    CHECK(m.values.rows() == 3);
    CHECK(slot == matrix_slot(m.mode, FeatureSubset::parse(m.subset), m.kind));
  }
  CHECK(index.at("diagrams").contains("nonmetric/eyes+nose"));
  CHECK(index.at("matrices").contains("metric/full/wasserstein1"));
}

TEST_CASE("deleting objects reproduces identical bytes") {
  testing::TempDir dir;
  put_sequence(dir.path() / "data", make_sequence("S1", Emotion::happiness, 4, 2));
  auto c = small_config(dir.path() / "data", dir.path() / "cache");
  c.modes = {FiltrationMode::metric, FiltrationMode::nonmetric};
  c.kinds = {DistanceKind::bottleneck, DistanceKind::wasserstein1};
  run_pipeline(c);
  const auto before = snapshot(c.cache_dir);
  fs::remove_all(c.cache_dir / "objects");
  const auto again = run_pipeline(c);
  CHECK(again.diagram_sets_computed == 2);
  CHECK(snapshot(c.cache_dir) == before);
}

TEST_CASE("worker count does not change the cache") {
  testing::TempDir dir;
  put_sequence(dir.path() / "data", make_sequence("S1", Emotion::happiness, 4, 1));
  put_sequence(dir.path() / "data", make_sequence("S2", Emotion::sadness, 3, 2));
  auto c = small_config(dir.path() / "data", dir.path() / "one");
  c.subsets = subset_presets();
  c.kinds = {DistanceKind::bottleneck, DistanceKind::wasserstein1};
  run_pipeline(c);
  c.cache_dir = dir.path() / "four";
  c.workers = 4;
  run_pipeline(c);
  CHECK(snapshot(dir.path() / "one") == snapshot(dir.path() / "four"));
}

TEST_CASE("a bad sequence does not stop the others") {
  testing::TempDir dir;
  const auto data = dir.path() / "data";
  put_sequence(data, make_sequence("S1", Emotion::happiness, 3));
  testing::write_file(data / "S2" / "broken.json", "{ not json");
  auto short_seq = make_sequence("S3", Emotion::fear, 2);
  // Drop one landmark from every frame so the count no longer matches the layout.
  for (auto& f : short_seq.frames) f.points.conservativeResize(f.points.rows() - 1, 3);
  put_sequence(data, short_seq);

  const auto r = run_pipeline(small_config(data, dir.path() / "cache"));
  CHECK(r.sequences == 1);
  REQUIRE(r.errors.size() == 2);
  std::vector<std::string> kinds = {r.errors[0].kind, r.errors[1].kind};
  std::sort(kinds.begin(), kinds.end());
  CHECK(kinds == std::vector<std::string>{"format", "validation"});
  CHECK(fs::exists(index_path(dir.path() / "cache", "S1", "happiness")));
  CHECK_FALSE(fs::exists(index_path(dir.path() / "cache", "S3", "fear")));
}

TEST_CASE("AU sidecar is ingested") {
  testing::TempDir dir;
  const auto data = dir.path() / "data";
  put_sequence(data, make_sequence("S1", Emotion::happiness, 3));
  testing::write_file(data / "S1" / "happiness.au.csv", "frame,AU26_r\n0,1\n1,2\n2,3\n");
  const auto c = small_config(data, dir.path() / "cache");
  const auto r = run_pipeline(c);
  CHECK(r.sequences == 1);
  const auto index = read_index(c.cache_dir, "S1", "happiness");
  REQUIRE(index.at("au").is_string());
  const auto au = json::parse(*ContentStore(c.cache_dir).read(index.at("au").get<std::string>()));
  CHECK(au.at("series")[0].at("values") == json::array({1.0, 2.0, 3.0}));
}

TEST_CASE("single frame sequence gives a 1x1 matrix") {
  testing::TempDir dir;
  put_sequence(dir.path() / "data", make_sequence("S1", Emotion::other, 1));
  const auto c = small_config(dir.path() / "data", dir.path() / "cache");
  const auto r = run_pipeline(c);
  CHECK(r.errors.empty());
  const auto index = read_index(c.cache_dir, "S1", "other");
  const auto key = index.at("matrices").begin()->get<std::string>();
  const auto m = matrix_from_json(json::parse(*ContentStore(c.cache_dir).read(key)));
  CHECK(m.values.rows() == 1);
  CHECK(m.values(0, 0) == 0.0);
}

TEST_CASE("changed sequence content gets new keys") {
  testing::TempDir dir;
  const auto data = dir.path() / "data";
  put_sequence(data, make_sequence("S1", Emotion::happiness, 3, 1));
  const auto c = small_config(data, dir.path() / "cache");
  run_pipeline(c);
  const auto first = read_index(c.cache_dir, "S1", "happiness");
  put_sequence(data, make_sequence("S1", Emotion::happiness, 3, 2));
  const auto r = run_pipeline(c);
  CHECK(r.diagram_sets_computed == 1);
  const auto second = read_index(c.cache_dir, "S1", "happiness");
  CHECK(first.at("sequence") != second.at("sequence"));
  CHECK(first.at("diagrams") != second.at("diagrams"));
}

TEST_CASE("benchmark rows") {
  const auto seq = make_sequence("B", Emotion::other, 6, 3);
  const auto rows = benchmark(seq, default_connectivity(), FeatureSubset::all(), 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mode == FiltrationMode::metric);
  CHECK(rows[1].mode == FiltrationMode::nonmetric);
  for (const auto& r : rows) {
    CHECK(r.persistence_seconds >= 0.0);
    CHECK(r.mean_h0_positive <= r.mean_h0);
    CHECK(r.mean_h1_positive <= r.mean_h1);
  }
  CHECK(rows[0].mean_h0 == 83.0);
  CHECK(rows[1].mean_h0 + rows[1].mean_h1 < rows[0].mean_h0 + rows[0].mean_h1);

  const auto again = benchmark(seq, default_connectivity(), FeatureSubset::all(), 1);
  CHECK(again[1].mean_h1 == rows[1].mean_h1);
  CHECK(again[0].mean_h1_positive == rows[0].mean_h1_positive);

  const auto j = bench_to_json(rows);
  CHECK(j.size() == 2);
  const auto table = bench_table(rows);
  CHECK(table.find("|H1|>0") != std::string::npos);
  CHECK(table.find("\nNM ") != std::string::npos);
}

TEST_CASE("supersampling comparison") {
  SyntheticSpec spec;
  const auto pose = generate_synthetic(spec).frames[0];
  const auto subset = FeatureSubset::parse("mouth+nose");
  const auto report = compare_supersampling(pose, default_connectivity(), subset, {8.0, 4.0, 2.0});
  REQUIRE(report.rows.size() == 5);
  CHECK(report.rows.front().label == "original");
  CHECK(report.rows.back().label == "nonmetric");
  CHECK(report.rows[3].h1_bottleneck_to_finest == 0.0);
  for (std::size_t k = 1; k < 4; ++k) {
    CHECK(report.rows[k].points >= report.rows[k - 1].points);
    CHECK(report.rows[k].features >= report.rows[k - 1].features);
    CHECK(report.rows[k].epsilon.has_value());
  }
  const auto j = report.to_json();
  CHECK(j.at("rows")[0].at("epsilon").is_null());
  CHECK(j.at("rows")[1].at("epsilon") == 8.0);

  CHECK_THROWS_AS(compare_supersampling(pose, default_connectivity(), subset, {}), ParameterError);
  CHECK_THROWS_AS(compare_supersampling(pose, default_connectivity(), subset, {2.0, 4.0}), ParameterError);
  CHECK_THROWS_AS(compare_supersampling(pose, default_connectivity(), subset, {2.0, 0.0}), ParameterError);
}
