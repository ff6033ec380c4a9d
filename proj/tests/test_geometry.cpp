#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>

#include "facetda/error.hpp"
#include "facetda/geometry.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace facetda;
using Eigen::Vector3d;

TEST_CASE("point distance matrix of a 3-4-5 pair") {
  Points3 p(2, 3);
  p << 0, 0, 0, 3, 4, 0;
  const auto dm = point_distance_matrix(p);
  CHECK(dm(0, 1) == 5.0);
  CHECK(dm(1, 0) == 5.0);
  CHECK(dm.metricity == Metricity::metric);
}

TEST_CASE("single point gives a 1x1 zero matrix") {
  Points3 p(1, 3);
  p << 1, 2, 3;
  const auto dm = point_distance_matrix(p);
  CHECK(dm.size() == 1);
  CHECK(dm(0, 0) == 0.0);
}

TEST_CASE("random point distances satisfy the triangle inequality on every triple") {
  std::mt19937_64 rng(3);
  const auto dm = point_distance_matrix(testing::random_cloud(rng, 10, 5.0));
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 10; ++k) CHECK(dm(i, k) <= dm(i, j) + dm(j, k) + 1e-12);
  CHECK_NOTHROW(validate(dm));
}

TEST_CASE("point distance matrix is templated on the scalar") {
  PointsX<float> p(3, 3);
  p << 0, 0, 0, 1, 0, 0, 0, 2, 0;
  const auto dm = point_distance_matrix(p);
  static_assert(std::is_same_v<decltype(dm)::Matrix::Scalar, float>);
  CHECK(dm(1, 2) == doctest::Approx(std::sqrt(5.0f)));
}

TEST_CASE("validate rejects broken matrices") {
  DistanceMatrix dm;
  dm.values = Eigen::MatrixXd::Zero(3, 3);
  dm.values(0, 1) = 1.0;
  CHECK_THROWS_AS(validate(dm), ValidationError);  // asymmetric
  dm.values(1, 0) = 1.0;
  dm.values(0, 2) = dm.values(2, 0) = 5.0;
  dm.values(1, 2) = dm.values(2, 1) = 1.0;
  CHECK_THROWS_AS(validate(dm), ValidationError);  // 5 > 1 + 1
  dm.metricity = Metricity::nonmetric;
  CHECK_NOTHROW(validate(dm));
  dm.values(2, 2) = 0.5;
  CHECK_THROWS_AS(validate(dm), ValidationError);
}

TEST_CASE("segment distance examples") {
  CHECK(segment_segment_distance(Vector3d(0, 0, 0), Vector3d(1, 0, 0), Vector3d(0, 1, 0), Vector3d(1, 1, 0)) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(segment_segment_distance(Vector3d(-1, 0, 0), Vector3d(1, 0, 0), Vector3d(0, -1, 0), Vector3d(0, 1, 0)) ==
        0.0);

  const Vector3d a0(0, 0, 0), a1(1, 0, 0), b0(0, 0, 1), b1(0, 1, 1);
  const double exact = segment_segment_distance(a0, a1, b0, b1);
  CHECK(exact == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(oracle::segment_distance_grid(a0, a1, b0, b1, 10000) - exact) < 1e-3);
}

TEST_CASE("segment distance matches a grid search on random segments") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto rv = [&] { return Vector3d(u(rng), u(rng), u(rng)); };
  const int steps = 300;
  for (int trial = 0; trial < 60; ++trial) {
    const Vector3d a0 = rv(), a1 = rv(), b0 = rv();
    // Every fourth trial is near-parallel, every fifth has a degenerate segment.
    Vector3d b1 = trial % 4 == 0 ? b0 + (a1 - a0) * 0.7 + Vector3d::Constant(1e-9) : rv();
    if (trial % 5 == 0) b1 = b0;
    const double exact = segment_segment_distance(a0, a1, b0, b1);
    const double grid = oracle::segment_distance_grid(a0, a1, b0, b1, steps);
    const double slack = ((a1 - a0).norm() + (b1 - b0).norm()) / steps;
    INFO("trial " << trial << " diff " << exact - grid);
    // Near-parallel pairs take the parallel branch, exact up to the 1e-9 skew.
    CHECK(exact <= grid + 1e-8);
    CHECK(grid - exact <= slack);
  }
}

TEST_CASE("segment distance properties") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  auto rv = [&] { return Vector3d(u(rng), u(rng), u(rng)); };
  for (int trial = 0; trial < 200; ++trial) {
    const Vector3d a0 = rv(), a1 = rv(), b0 = rv(), b1 = rv();
    const double d = segment_segment_distance(a0, a1, b0, b1);
    CHECK(d >= 0.0);
    CHECK(d == doctest::Approx(segment_segment_distance(b0, b1, a0, a1)).epsilon(1e-12));
    CHECK(d == doctest::Approx(segment_segment_distance(a1, a0, b1, b0)).epsilon(1e-12));

    const Eigen::Matrix3d rot = Eigen::AngleAxisd(u(rng), rv().normalized()).toRotationMatrix();
    const Vector3d shift = rv();
    auto move = [&](const Vector3d& p) -> Vector3d { return rot * p + shift; };
    CHECK(segment_segment_distance(move(a0), move(a1), move(b0), move(b1)) == doctest::Approx(d).epsilon(1e-9));
    CHECK(segment_segment_distance(a0 * 2.5, a1 * 2.5, b0 * 2.5, b1 * 2.5) == doctest::Approx(2.5 * d).epsilon(1e-9));

    const double endpoint_min = std::min({(a0 - b0).norm(), (a0 - b1).norm(), (a1 - b0).norm(), (a1 - b1).norm()});
    CHECK(d <= endpoint_min + 1e-12);
    CHECK(segment_segment_distance(a0, a0, b0, b0) == doctest::Approx((a0 - b0).norm()).epsilon(1e-15));
  }
}

TEST_CASE("segment distance accepts row vectors and float") {
  Points3 p(4, 3);
  p << 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 1, 1;
  CHECK(segment_segment_distance(p.row(0), p.row(1), p.row(2), p.row(3)) == doctest::Approx(1.0));
  const Eigen::Vector3f a0(0, 0, 0), a1(2, 0, 0), b0(1, 3, 0), b1(1, 5, 0);
  CHECK(segment_segment_distance(a0, a1, b0, b1) == doctest::Approx(3.0f));
}

TEST_CASE("edge distance matrix examples") {
  Points3 square(4, 3);
  square << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
  const std::vector<Edge> edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  const auto dm = edge_distance_matrix(square, edges);
  CHECK(dm.metricity == Metricity::nonmetric);
  CHECK(dm(0, 1) == 0.0);  // shared endpoint, distinct edges
  CHECK(dm(0, 2) == doctest::Approx(1.0));
  CHECK(dm(1, 3) == doctest::Approx(1.0));

  std::mt19937_64 rng(8);
  const auto pts = testing::random_cloud(rng, 12, 4.0);
  std::vector<Edge> random_edges;
  for (int i = 0; i + 1 < 12; ++i) random_edges.push_back({i, i + 1});
  const auto r = edge_distance_matrix(pts, random_edges);
  CHECK(r.values == r.values.transpose());
  CHECK(r.values.diagonal().isZero());
  CHECK_NOTHROW(validate(r));
}

TEST_CASE("supersample examples") {
  Points3 seg(2, 3);
  seg << 0, 0, 0, 8, 0, 0;
  CHECK(supersample(seg, {{0, 1}}, 8.0).rows() == 2);
  const auto five = supersample(seg, {{0, 1}}, 2.0);
  REQUIRE(five.rows() == 5);
  for (int k = 0; k < 5; ++k) CHECK(five(k, 0) == doctest::Approx(2.0 * k));

  Points3 square(4, 3);
  square << 0, 0, 0, 4, 0, 0, 4, 4, 0, 0, 4, 0;
  const std::vector<Edge> ring = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  const auto s = supersample(square, ring, 1.0);
  CHECK(s.rows() == 16);
  // Walk the perimeter: every sample's nearest other sample is within 1.
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    double nearest = 1e9;
    int within = 0;
    for (Eigen::Index j = 0; j < s.rows(); ++j) {
      if (i == j) continue;
      const double d = (s.row(i) - s.row(j)).norm();
      nearest = std::min(nearest, d);
      within += d <= 1.0 + 1e-12;
    }
    CHECK(nearest <= 1.0 + 1e-12);
    CHECK(within == 2);  // exactly the two ring neighbours
  }
  CHECK_THROWS_AS(supersample(square, ring, 0.0), ParameterError);
}

TEST_CASE("supersample count grows with length over epsilon") {
  Points3 seg(2, 3);
  seg << 0, 0, 0, 10, 0, 0;
  for (double eps : {5.0, 1.0, 0.1, 0.01}) {
    const auto n = supersample(seg, {{0, 1}}, eps).rows();
    CHECK(n == static_cast<Eigen::Index>(std::llround(10.0 / eps)) + 1);
  }
  // Collapsed edges contribute one point.
  Points3 dup(2, 3);
  dup << 1, 1, 1, 1, 1, 1;
  CHECK(supersample(dup, {{0, 1}}, 0.5).rows() == 1);
}
