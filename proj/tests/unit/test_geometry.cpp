#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qstrat/geometry.hpp"

using namespace qstrat;

namespace {

SpaceTimePoint random_point(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpatialVec x(m);
  for (int a = 0; a < m; ++a) x[a] = u(rng);
  return {x, u(rng)};
}

}  // namespace

TEST(Geometry, ParabolicDistanceIsAMetric) {
  std::mt19937_64 rng(3);
  for (int m = 1; m <= 4; ++m) {
    for (int i = 0; i < 500; ++i) {
      const auto a = random_point(rng, m), b = random_point(rng, m), c = random_point(rng, m);
      EXPECT_DOUBLE_EQ(parabolic_distance(a, b), parabolic_distance(b, a));
      EXPECT_LE(parabolic_distance(a, c), parabolic_distance(a, b) + parabolic_distance(b, c) + 1e-12);
      EXPECT_EQ(parabolic_distance(a, a), 0.0);
    }
  }
}

TEST(Geometry, ParabolicScaling) {
  // d((lx, l^2 t), (ly, l^2 s)) = l d((x, t), (y, s)).
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_point(rng, 3), b = random_point(rng, 3);
    const double l = 0.1 + 3.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const SpaceTimePoint la(l * a.x, l * l * a.t), lb(l * b.x, l * l * b.t);
    EXPECT_NEAR(parabolic_distance(la, lb), l * parabolic_distance(a, b), 1e-12);
  }
}

TEST(Geometry, WrapDeltaUsesMinimumImage) {
  EXPECT_NEAR(wrap_delta(0.9, 1.0), -0.1, 1e-15);
  EXPECT_NEAR(wrap_delta(-0.9, 1.0), 0.1, 1e-15);
  EXPECT_NEAR(wrap_delta(0.3, 1.0), 0.3, 1e-15);
  SpatialVec x(2), y(2);
  x << 0.05, 0.5;
  y << 0.95, 0.5;
  EXPECT_NEAR(spatial_distance(x, y, 1.0), 0.1, 1e-15);
  EXPECT_NEAR(spatial_distance(x, y), 0.9, 1e-15);
}

TEST(Geometry, BallMembership) {
  const ParabolicBall two{origin_point(2), 1.0, BallKind::kTwoSided};
  const ParabolicBall back{origin_point(2), 1.0, BallKind::kBackward};
  SpatialVec x(2);
  x << 0.5, 0.0;
  EXPECT_TRUE(two.contains({x, 0.9}));
  EXPECT_FALSE(back.contains({x, 0.9}));
  EXPECT_TRUE(back.contains({x, -0.9}));
  EXPECT_FALSE(two.contains({x, 1.0}));  // open in time
  x << 1.0, 0.0;
  EXPECT_FALSE(two.contains({x, 0.0}));  // open in space
}

TEST(Geometry, BallVolumeMatchesClosedForm) {
  EXPECT_NEAR(unit_ball_volume(1), 2.0, 1e-14);
  EXPECT_NEAR(unit_ball_volume(2), std::numbers::pi, 1e-14);
  EXPECT_NEAR(unit_ball_volume(3), 4.0 * std::numbers::pi / 3.0, 1e-14);
  EXPECT_NEAR(unit_ball_volume(4), std::numbers::pi * std::numbers::pi / 2.0, 1e-14);
  EXPECT_NEAR(ball_volume(0.5, 3), 2.0 * 4.0 * std::numbers::pi / 3.0 * std::pow(0.5, 5), 1e-14);
  EXPECT_THROW(ball_volume(0.0, 3), PreconditionError);
}

TEST(Geometry, GridIndexRoundTrip) {
  const GridSpec g(3, 5, 0.2, false);
  std::array<int, 3> idx{};
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    g.unflatten(c, idx);
    EXPECT_EQ(g.flat_index(idx), c);
  }
  EXPECT_EQ(g.cell_count(), 125u);
  EXPECT_EQ(g.neighbor(0, 0, -1), kNoCell);
  const GridSpec t(3, 5, 0.2, true);
  EXPECT_NE(t.neighbor(0, 0, -1), kNoCell);
  EXPECT_EQ(t.neighbor(t.neighbor(7, 2, 1), 2, -1), 7u);
}

TEST(Geometry, TubularVolumeOfOnePointIsTheBall) {
  for (int m : {1, 2, 3}) {
    const double r = 0.25, h = r / 16;
    const int n = static_cast<int>(std::lround(1.0 / h));
    const GridSpec g(m, n, h, false, SpatialVec::Constant(m, -0.5 + 0.5 * h));
    const TimeAxis time{-0.25, r * r / 32, static_cast<int>(std::lround(0.5 / (r * r / 32)))};
    const std::vector<SpaceTimePoint> pts{origin_point(m)};
    const double v = tubular_volume(pts, r, g, time);
    EXPECT_NEAR(v / ball_volume(r, m), 1.0, 0.03) << "m=" << m;
  }
}

TEST(Geometry, TubularVolumeIsMonotoneAndSubadditive) {
  const double r = 0.125, h = r / 4;
  const GridSpec g(2, 32, h, false, SpatialVec::Constant(2, -0.5 + 0.5 * h));
  const TimeAxis time{-0.1, r * r / 4, static_cast<int>(std::ceil(0.2 / (r * r / 4)))};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::vector<SpaceTimePoint> pts;
  double previous = 0.0, singles = 0.0;
  for (int i = 0; i < 12; ++i) {
    SpatialVec x(2);
    x << u(rng), u(rng);
    pts.emplace_back(x, 0.1 * u(rng));
    const double v = tubular_volume(pts, r, g, time);
    const std::vector<SpaceTimePoint> one{pts.back()};
    singles += tubular_volume(one, r, g, time);
    EXPECT_GE(v, previous);
    EXPECT_LE(v, singles + 1e-12);
    previous = v;
  }
}

TEST(Geometry, TubularVolumeRejectsCoarseGrids) {
  const GridSpec g(2, 8, 0.125, false);
  const std::vector<SpaceTimePoint> pts{origin_point(2)};
  EXPECT_THROW(tubular_volume(pts, 0.25, g, TimeAxis{-0.1, 0.001, 200}), ResolutionError);
  EXPECT_THROW(tubular_volume(pts, 0.5, g, TimeAxis{-0.1, 0.1, 2}), ResolutionError);
}
