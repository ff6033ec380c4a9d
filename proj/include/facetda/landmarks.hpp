#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "facetda/error.hpp"

namespace facetda {

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

enum class Region : std::uint8_t {
  jawline,
  mouth,
  nose,
  leftEye,
  rightEye,
  leftEyebrow,
  rightEyebrow,
};

inline constexpr std::array<Region, 7> kAllRegions = {
    Region::jawline, Region::mouth,       Region::nose,        Region::leftEye,
    Region::rightEye, Region::leftEyebrow, Region::rightEyebrow,
};

std::string_view to_string(Region region);
/// Throws ParameterError for anything outside the seven labels.
Region region_from_string(std::string_view name);

enum class Emotion : std::uint8_t { anger, disgust, fear, happiness, sadness, surprise, other };

std::string_view to_string(Emotion emotion);
Emotion emotion_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// Geometry containers
// ---------------------------------------------------------------------------

/// One landmark per row, coordinates in millimeters.
template <typename Scalar>
using PointsX = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points3 = PointsX<double>;

/// Unordered landmark pair, stored with first < second.
using Edge = std::array<int, 2>;

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

struct FacialPose {
  int frame_index = 0;
  Points3 points;

  Eigen::Index landmark_count() const { return points.rows(); }
};

/// Throws ValidationError on non-finite coordinates or an empty pose.
void validate(const FacialPose& pose);

struct LandmarkConnectivity {
  std::vector<Edge> edges;
  std::vector<Region> region_of;  // indexed by landmark

  int landmark_count() const { return static_cast<int>(region_of.size()); }
  std::vector<int> landmarks_in(Region region) const;
};

/// Checks the edge invariants: no self-loops, no duplicates, indices in
/// range, and no edge spanning two regions.
void validate(const LandmarkConnectivity& conn);

/// Non-empty set of region labels, kept as a bitmask in canonical order.
class FeatureSubset {
 public:
  FeatureSubset() = default;
  FeatureSubset(std::initializer_list<Region> regions);

  static FeatureSubset all();
  /// Preset names: full, eyes+nose, mouth+nose, eyebrows+nose. Any other
  /// value is parsed as a '+'-separated list of region labels.
  static FeatureSubset parse(std::string_view text);

  void insert(Region r) { mask_ |= bit(r); }
  bool contains(Region r) const { return (mask_ & bit(r)) != 0; }
  bool empty() const { return mask_ == 0; }
  std::vector<Region> regions() const;

  /// Preset name when the set equals one, otherwise the '+'-joined labels.
  std::string name() const;

  friend bool operator==(const FeatureSubset&, const FeatureSubset&) = default;

 private:
  static std::uint8_t bit(Region r) { return static_cast<std::uint8_t>(1u << static_cast<int>(r)); }
  std::uint8_t mask_ = 0;
};

/// The four presets used for the small-multiples columns.
std::vector<FeatureSubset> subset_presets();

struct LandmarkSequence {
  std::string subject_id;
  Emotion emotion = Emotion::other;
  std::vector<FacialPose> frames;

  int landmark_count() const {
    return frames.empty() ? 0 : static_cast<int>(frames.front().landmark_count());
  }
};

/// Non-empty, strictly increasing frame indices, constant landmark count,
/// finite coordinates.
void validate(const LandmarkSequence& seq);

struct AUSeries {
  int au_id = 0;
  std::vector<double> intensities;
};

struct AuLoadResult {
  std::vector<AUSeries> series;
  std::vector<int> frames;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

enum class SequenceFormat { json, csv };

LandmarkSequence load_sequence(const std::filesystem::path& path, SequenceFormat format);
/// Format chosen by extension (.json or .csv).
LandmarkSequence load_sequence(const std::filesystem::path& path);
void save_sequence(const LandmarkSequence& seq, const std::filesystem::path& path,
                   SequenceFormat format);

LandmarkSequence parse_sequence_json(std::string_view text);
std::string sequence_to_json(const LandmarkSequence& seq);

LandmarkConnectivity load_connectivity(const std::filesystem::path& path);
LandmarkConnectivity parse_connectivity_json(std::string_view text);
std::string connectivity_to_json(const LandmarkConnectivity& conn);

/// Reconstructed 83-landmark / 81-edge layout: closed rings for both eyes,
/// both eyebrows and the outer and inner lips; open polylines for the nose
/// and the jawline.
const LandmarkConnectivity& default_connectivity();

AuLoadResult load_au_csv(const std::filesystem::path& path);
AuLoadResult parse_au_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Subsets
// ---------------------------------------------------------------------------

struct SubsetSelection {
  Points3 points;
  std::vector<Edge> edges;       // re-indexed into `points`
  std::vector<int> landmark_ids;  // original index of each selected point
};

SubsetSelection select_subset(const FacialPose& pose, const LandmarkConnectivity& conn,
                              const FeatureSubset& subset);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

enum class Motion { static_pose, mouth_open_close, eye_blink };

std::string_view to_string(Motion motion);
Motion motion_from_string(std::string_view name);

struct SyntheticSpec {
  int n_frames = 1;
  Motion motion = Motion::static_pose;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  std::string subject_id = "SYN";
  Emotion emotion = Emotion::other;
};

/// Sequence over the default connectivity. The same spec always yields the
/// same bytes.
LandmarkSequence generate_synthetic(const SyntheticSpec& spec);

/// Shoelace area of a closed planar (x, y) ring.
double ring_area_xy(const Points3& points, const std::vector<int>& ring);

/// Landmark indices of the inner lip ring of the default layout, in ring order.
std::vector<int> default_inner_mouth_ring();

}  // namespace facetda
