#include "facetda/landmarks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

namespace facetda {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kRegionNames = {
    "jawline", "mouth", "nose", "leftEye", "rightEye", "leftEyebrow", "rightEyebrow"};

constexpr std::array<std::string_view, 7> kEmotionNames = {
    "anger", "disgust", "fear", "happiness", "sadness", "surprise", "other"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// strtod accepts nan/inf, which the validators then reject with a clearer message.
bool parse_double(std::string_view field, double& out) {
  std::string buf(field);
  if (buf.empty()) return false;
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size();
}

bool parse_int(std::string_view field, int& out) {
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

double json_coordinate(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (v.is_string()) {
    double d = 0;
    if (parse_double(v.get<std::string>(), d)) return d;
  }
  throw FormatError(where + ": coordinate is not a number");
}

}  // namespace

std::string_view to_string(Region region) { return kRegionNames.at(static_cast<int>(region)); }

Region region_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kRegionNames.size(); ++i)
    if (kRegionNames[i] == name) return static_cast<Region>(i);
  throw ParameterError("unknown region label '" + std::string(name) + "'");
}

std::string_view to_string(Emotion emotion) { return kEmotionNames.at(static_cast<int>(emotion)); }

Emotion emotion_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i)
    if (kEmotionNames[i] == name) return static_cast<Emotion>(i);
  throw ParameterError("unknown emotion label '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

void validate(const FacialPose& pose) {
  if (pose.landmark_count() == 0)
    throw ValidationError("frame " + std::to_string(pose.frame_index) + ": no landmarks");
  if (!pose.points.allFinite())
    throw ValidationError("frame " + std::to_string(pose.frame_index) + ": non-finite coordinate");
}

std::vector<int> LandmarkConnectivity::landmarks_in(Region region) const {
  std::vector<int> out;
  for (int i = 0; i < landmark_count(); ++i)
    if (region_of[i] == region) out.push_back(i);
  return out;
}

void validate(const LandmarkConnectivity& conn) {
  std::set<Edge> seen;
  const int n = conn.landmark_count();
  for (const auto& [a, b] : conn.edges) {
    const std::string tag = "edge [" + std::to_string(a) + "," + std::to_string(b) + "]";
    if (a == b) throw ValidationError(tag + ": self-loop");
    if (a < 0 || b < 0 || a >= n || b >= n) throw ValidationError(tag + ": endpoint out of range");
    if (!seen.insert(make_edge(a, b)).second) throw ValidationError(tag + ": duplicate edge");
    if (conn.region_of[a] != conn.region_of[b]) throw ValidationError(tag + ": crosses regions");
  }
}

// ---------------------------------------------------------------------------

FeatureSubset::FeatureSubset(std::initializer_list<Region> regions) {
  for (Region r : regions) insert(r);
}

FeatureSubset FeatureSubset::all() {
  FeatureSubset s;
  for (Region r : kAllRegions) s.insert(r);
  return s;
}

std::vector<FeatureSubset> subset_presets() {
  return {
      FeatureSubset::all(),
      FeatureSubset{Region::leftEye, Region::rightEye, Region::nose},
      FeatureSubset{Region::mouth, Region::nose},
      FeatureSubset{Region::leftEyebrow, Region::rightEyebrow, Region::nose},
  };
}

namespace {
constexpr std::array<std::string_view, 4> kPresetNames = {"full", "eyes+nose", "mouth+nose",
                                                          "eyebrows+nose"};
}

FeatureSubset FeatureSubset::parse(std::string_view text) {
  const auto presets = subset_presets();
  for (std::size_t i = 0; i < kPresetNames.size(); ++i)
    if (kPresetNames[i] == text) return presets[i];
  FeatureSubset s;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('+', start);
    auto token = text.substr(start, pos == std::string_view::npos ? pos : pos - start);
    s.insert(region_from_string(token));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (s.empty()) throw ParameterError("empty feature subset");
  return s;
}

std::vector<Region> FeatureSubset::regions() const {
  std::vector<Region> out;
  for (Region r : kAllRegions)
    if (contains(r)) out.push_back(r);
  return out;
}

std::string FeatureSubset::name() const {
  const auto presets = subset_presets();
  for (std::size_t i = 0; i < presets.size(); ++i)
    if (presets[i] == *this) return std::string(kPresetNames[i]);
  std::string out;
  for (Region r : regions()) {
    if (!out.empty()) out += '+';
    out += to_string(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

void validate(const LandmarkSequence& seq) {
  if (seq.frames.empty()) throw ValidationError("sequence has no frames");
  const auto n = seq.frames.front().landmark_count();
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto& f = seq.frames[k];
    validate(f);
    if (f.landmark_count() != n)
      throw ValidationError("frame " + std::to_string(f.frame_index) +
                            ": landmark_count differs from first frame");
    if (k > 0 && f.frame_index <= seq.frames[k - 1].frame_index)
      throw ValidationError("frame " + std::to_string(f.frame_index) +
                            ": frame_index not increasing");
  }
}

LandmarkSequence parse_sequence_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("sequence json: ") + e.what());
  }
  LandmarkSequence seq;
  try {
    seq.subject_id = doc.at("subject").get<std::string>();
    seq.emotion = emotion_from_string(doc.at("emotion").get<std::string>());
    const auto& frames = doc.at("frames");
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const std::string where = "frame " + std::to_string(k);
      const auto& f = frames[k];
      FacialPose pose;
      pose.frame_index = f.at("i").get<int>();
      const auto& pts = f.at("p");
      pose.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
      for (std::size_t r = 0; r < pts.size(); ++r) {
        if (!pts[r].is_array() || pts[r].size() != 3)
          throw FormatError(where + ", point " + std::to_string(r) + ": expected [x,y,z]");
        for (int c = 0; c < 3; ++c)
          pose.points(static_cast<Eigen::Index>(r), c) = json_coordinate(pts[r][c], where);
      }
      seq.frames.push_back(std::move(pose));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("sequence json: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("sequence json: ") + e.what());
  }
  validate(seq);
  return seq;
}

std::string sequence_to_json(const LandmarkSequence& seq) {
  json frames = json::array();
  for (const auto& f : seq.frames) {
    json pts = json::array();
    for (Eigen::Index r = 0; r < f.points.rows(); ++r)
      pts.push_back({f.points(r, 0), f.points(r, 1), f.points(r, 2)});
    frames.push_back({{"i", f.frame_index}, {"p", std::move(pts)}});
  }
  json doc = {{"subject", seq.subject_id},
              {"emotion", std::string(to_string(seq.emotion))},
              {"frames", std::move(frames)}};
  return doc.dump();
}

namespace {

LandmarkSequence parse_sequence_csv(std::string_view text, const std::string& stem) {
  LandmarkSequence seq;
  // <subject>_<emotion>.csv, falling back to the whole stem with "other".
  seq.subject_id = stem;
  if (auto us = stem.rfind('_'); us != std::string::npos) {
    try {
      seq.emotion = emotion_from_string(stem.substr(us + 1));
      seq.subject_id = stem.substr(0, us);
    } catch (const ParameterError&) {
    }
  }
  const auto lines = split_lines(text);
  std::size_t width = 0;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = "line " + std::to_string(ln + 1);
    int frame = 0;
    if (!parse_int(fields[0], frame)) {
      if (ln == 0) continue;  // header row
      throw FormatError(where + ": frame column is not an integer");
    }
    if (fields.size() < 4 || (fields.size() - 1) % 3 != 0)
      throw FormatError(where + ": expected frame followed by x,y,z triples");
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw ValidationError(where + ": landmark_count differs from first frame");
    FacialPose pose;
    pose.frame_index = frame;
    pose.points.resize(static_cast<Eigen::Index>((fields.size() - 1) / 3), 3);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      double v = 0;
      if (!parse_double(fields[c], v)) throw FormatError(where + ", column " + std::to_string(c + 1) + ": not a number");
      pose.points(static_cast<Eigen::Index>((c - 1) / 3), static_cast<Eigen::Index>((c - 1) % 3)) = v;
    }
    seq.frames.push_back(std::move(pose));
  }
  validate(seq);
  return seq;
}

std::string sequence_to_csv(const LandmarkSequence& seq) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "frame";
  for (int k = 0; k < seq.landmark_count(); ++k) out << ",x" << k << ",y" << k << ",z" << k;
  out << '\n';
  for (const auto& f : seq.frames) {
    out << f.frame_index;
    for (Eigen::Index r = 0; r < f.points.rows(); ++r)
      for (int c = 0; c < 3; ++c) out << ',' << f.points(r, c);
    out << '\n';
  }
  return out.str();
}

}  // namespace

LandmarkSequence load_sequence(const std::filesystem::path& path, SequenceFormat format) {
  const auto text = read_file(path);
  return format == SequenceFormat::json ? parse_sequence_json(text)
                                        : parse_sequence_csv(text, path.stem().string());
}

LandmarkSequence load_sequence(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return load_sequence(path, SequenceFormat::json);
  if (ext == ".csv") return load_sequence(path, SequenceFormat::csv);
  throw FormatError(path.string() + ": unknown sequence extension '" + ext + "'");
}

void save_sequence(const LandmarkSequence& seq, const std::filesystem::path& path,
                   SequenceFormat format) {
  write_file(path, format == SequenceFormat::json ? sequence_to_json(seq) : sequence_to_csv(seq));
}

// ---------------------------------------------------------------------------

LandmarkConnectivity parse_connectivity_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("connectivity json: ") + e.what());
  }
  LandmarkConnectivity conn;
  try {
    std::vector<std::pair<int, Region>> labels;
    for (const auto& [name, ids] : doc.at("regions").items()) {
      const Region r = region_from_string(name);
      for (const auto& id : ids) labels.emplace_back(id.get<int>(), r);
    }
    std::sort(labels.begin(), labels.end());
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (labels[k].first != static_cast<int>(k))
        throw ValidationError("connectivity: regions must cover landmarks 0..n-1 exactly once");
      conn.region_of.push_back(labels[k].second);
    }
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw FormatError("connectivity: edge must be [a,b]");
      const int a = e[0].get<int>(), b = e[1].get<int>();
      conn.edges.push_back(a == b ? Edge{a, b} : make_edge(a, b));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("connectivity json: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("connectivity json: ") + e.what());
  }
  validate(conn);
  return conn;
}

LandmarkConnectivity load_connectivity(const std::filesystem::path& path) {
  return parse_connectivity_json(read_file(path));
}

std::string connectivity_to_json(const LandmarkConnectivity& conn) {
  json regions = json::object();
  for (Region r : kAllRegions) {
    auto ids = conn.landmarks_in(r);
    if (!ids.empty()) regions[std::string(to_string(r))] = ids;
  }
  json edges = json::array();
  for (const auto& [a, b] : conn.edges) edges.push_back({a, b});
  return json{{"regions", regions}, {"edges", edges}}.dump();
}

// ---------------------------------------------------------------------------

AuLoadResult parse_au_csv(std::string_view text) {
  AuLoadResult out;
  const auto lines = split_lines(text);
  std::size_t ln = 0;
  while (ln < lines.size() && trim(lines[ln]).empty()) ++ln;
  if (ln == lines.size()) throw FormatError("au csv: empty file");

  const auto header = split_csv(trim(lines[ln]));
  int frame_col = -1;
  std::vector<std::pair<int, int>> au_cols;  // (column, au id)
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto h = header[c];
    if (h == "frame") frame_col = static_cast<int>(c);
    if (h.size() > 4 && h.front() == 'A' && h[1] == 'U' && h.substr(h.size() - 2) == "_r") {
      int id = 0;
      if (parse_int(h.substr(2, h.size() - 4), id)) au_cols.emplace_back(static_cast<int>(c), id);
    }
  }
  if (frame_col < 0) throw FormatError("au csv, line " + std::to_string(ln + 1) + ": missing frame column");
  if (au_cols.empty()) out.warnings.push_back("au csv: no AU<nn>_r columns found");
  for (const auto& [col, id] : au_cols) out.series.push_back(AUSeries{id, {}});

  for (++ln; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = "au csv, line " + std::to_string(ln + 1);
    if (fields.size() != header.size()) throw FormatError(where + ": column count mismatch");
    double frame = 0;
    if (!parse_double(fields[frame_col], frame)) throw FormatError(where + ": frame is not a number");
    out.frames.push_back(static_cast<int>(frame));
    for (std::size_t k = 0; k < au_cols.size(); ++k) {
      double v = 0;
      if (!parse_double(fields[au_cols[k].first], v) || !std::isfinite(v))
        throw FormatError(where + ": AU" + std::to_string(au_cols[k].second) + " is not a number");
      if (v < 0.0 || v > 5.0) {
        const double clamped = std::clamp(v, 0.0, 5.0);
        std::ostringstream msg;
        msg << where << ": AU" << au_cols[k].second << " intensity " << v << " clamped to "
            << clamped;
        out.warnings.push_back(msg.str());
        v = clamped;
      }
      out.series[k].intensities.push_back(v);
    }
  }
  return out;
}

AuLoadResult load_au_csv(const std::filesystem::path& path) { return parse_au_csv(read_file(path)); }

// ---------------------------------------------------------------------------

SubsetSelection select_subset(const FacialPose& pose, const LandmarkConnectivity& conn,
                              const FeatureSubset& subset) {
  if (subset.empty()) throw ParameterError("feature subset is empty");
  if (pose.landmark_count() != conn.landmark_count())
    throw ValidationError("pose has " + std::to_string(pose.landmark_count()) +
                          " landmarks, connectivity expects " +
                          std::to_string(conn.landmark_count()));
  SubsetSelection sel;
  std::vector<int> remap(conn.landmark_count(), -1);
  for (int i = 0; i < conn.landmark_count(); ++i) {
    if (!subset.contains(conn.region_of[i])) continue;
    remap[i] = static_cast<int>(sel.landmark_ids.size());
    sel.landmark_ids.push_back(i);
  }
  if (sel.landmark_ids.empty()) throw ValidationError("feature subset selects zero landmarks");
  sel.points.resize(static_cast<Eigen::Index>(sel.landmark_ids.size()), 3);
  for (std::size_t k = 0; k < sel.landmark_ids.size(); ++k)
    sel.points.row(static_cast<Eigen::Index>(k)) = pose.points.row(sel.landmark_ids[k]);
  for (const auto& [a, b] : conn.edges)
    if (remap[a] >= 0 && remap[b] >= 0) sel.edges.push_back(make_edge(remap[a], remap[b]));
  return sel;
}

}  // namespace facetda
