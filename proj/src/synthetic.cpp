#include <cmath>
#include <numbers>
#include <random>

#include "facetda/landmarks.hpp"

namespace facetda {

namespace {

// Landmark blocks of the default layout, in index order.
struct Block {
  Region region;
  int first;
  int count;
  bool closed;
};

constexpr std::array<Block, 8> kBlocks = {{
    {Region::leftEye, 0, 8, true},
    {Region::rightEye, 8, 8, true},
    {Region::leftEyebrow, 16, 10, true},
    {Region::rightEyebrow, 26, 10, true},
    {Region::nose, 36, 12, false},
    {Region::mouth, 48, 12, true},  // outer lip
    {Region::mouth, 60, 8, true},   // inner lip
    {Region::jawline, 68, 15, false},
}};

constexpr int kLandmarks = 83;
constexpr double kPi = std::numbers::pi;

LandmarkConnectivity build_default_connectivity() {
  LandmarkConnectivity conn;
  conn.region_of.resize(kLandmarks);
  for (const auto& b : kBlocks) {
    for (int k = 0; k < b.count; ++k) conn.region_of[b.first + k] = b.region;
    for (int k = 0; k + 1 < b.count; ++k) conn.edges.push_back(make_edge(b.first + k, b.first + k + 1));
    if (b.closed) conn.edges.push_back(make_edge(b.first, b.first + b.count - 1));
  }
  return conn;
}

// Neutral face with two animation controls in [0, 1].
Points3 face(double mouth_open, double blink) {
  Points3 p(kLandmarks, 3);
  auto ring = [&](int first, int count, double cx, double cy, double a, double b, double z,
                  double arch) {
    for (int k = 0; k < count; ++k) {
      const double t = 2.0 * kPi * k / count;
      const double dx = a * std::cos(t);
      p.row(first + k) << cx + dx, cy + b * std::sin(t) - arch * dx * dx, z;
    }
  };
  const double eye_b = 5.0 * (1.0 - blink);
  ring(0, 8, 32.0, 35.0, 14.0, eye_b, 8.0, 0.0);
  ring(8, 8, -32.0, 35.0, 14.0, eye_b, 8.0, 0.0);
  ring(16, 10, 32.0, 52.0, 20.0, 2.5, 10.0, 0.015);
  ring(26, 10, -32.0, 52.0, 20.0, 2.5, 10.0, 0.015);
  for (int k = 0; k < 12; ++k) {
    const double s = k / 11.0;
    const double peak = 1.0 - std::abs(2.0 * s - 1.0);
    p.row(36 + k) << -15.0 + 30.0 * s, 2.0 + 40.0 * peak, 15.0 + 12.0 * peak;
  }
  ring(48, 12, 0.0, -30.0, 26.0, 7.0 + 6.0 * mouth_open, 12.0, 0.0);
  ring(60, 8, 0.0, -30.0, 18.0, 9.0 * mouth_open, 12.0, 0.0);
  for (int k = 0; k < 15; ++k) {
    const double t = (190.0 + 160.0 * k / 14.0) * kPi / 180.0;
    const double c = std::cos(t);
    p.row(68 + k) << 72.0 * c, 20.0 + 95.0 * std::sin(t), -25.0 * c * c;
  }
  return p;
}

}  // namespace

const LandmarkConnectivity& default_connectivity() {
  static const LandmarkConnectivity conn = build_default_connectivity();
  return conn;
}

std::vector<int> default_inner_mouth_ring() {
  std::vector<int> out(8);
  for (int k = 0; k < 8; ++k) out[k] = 60 + k;
  return out;
}

std::string_view to_string(Motion motion) {
  switch (motion) {
    case Motion::static_pose: return "static";
    case Motion::mouth_open_close: return "mouth_open_close";
    case Motion::eye_blink: return "eye_blink";
  }
  return "static";
}

Motion motion_from_string(std::string_view name) {
  if (name == "static") return Motion::static_pose;
  if (name == "mouth_open_close") return Motion::mouth_open_close;
  if (name == "eye_blink") return Motion::eye_blink;
  throw ParameterError("unknown motion '" + std::string(name) + "'");
}

LandmarkSequence generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_frames < 1) throw ParameterError("n_frames must be >= 1");
  if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.noise_sd))
    throw ParameterError("noise_sd must be finite and >= 0");

  LandmarkSequence seq;
  seq.subject_id = spec.subject_id;
  seq.emotion = spec.emotion;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  for (int k = 0; k < spec.n_frames; ++k) {
    const double t = spec.n_frames == 1 ? 0.0 : static_cast<double>(k) / (spec.n_frames - 1);
    const double wave = std::sin(kPi * t);
    double mouth = 0.35, blink = 0.0;
    if (spec.motion == Motion::mouth_open_close) mouth = wave;
    if (spec.motion == Motion::eye_blink) blink = wave;

    FacialPose pose;
    pose.frame_index = k;
    pose.points = face(mouth, blink);
    if (spec.noise_sd > 0.0)
      for (Eigen::Index r = 0; r < pose.points.rows(); ++r)
        for (int c = 0; c < 3; ++c) pose.points(r, c) += spec.noise_sd * noise(rng);
    seq.frames.push_back(std::move(pose));
  }
  return seq;
}

double ring_area_xy(const Points3& points, const std::vector<int>& ring) {
  double twice = 0.0;
  for (std::size_t k = 0; k < ring.size(); ++k) {
    const auto a = points.row(ring[k]);
    const auto b = points.row(ring[(k + 1) % ring.size()]);
    twice += a(0) * b(1) - b(0) * a(1);
  }
  return std::abs(twice) / 2.0;
}

}  // namespace facetda
