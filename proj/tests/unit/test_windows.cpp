#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qstrat/solver.hpp"
#include "qstrat/windows.hpp"

using namespace qstrat;

TEST(Windows, GridCoversTheUnitBall) {
  const WindowGrid g(3, 9, 7);
  EXPECT_EQ(g.size(), g.per_slice() * 7);
  for (std::size_t i = 0; i < g.per_slice(); ++i) EXPECT_LT(g.x(i).norm(), 1.0);
  EXPECT_NEAR(g.volume(), 2.0 * 4.0 * std::numbers::pi / 3.0, 1e-12);
  // Neighbors are symmetric inside the ball.
  for (std::size_t i = 0; i < g.size(); ++i)
    for (int axis = 0; axis <= 3; ++axis) {
      const long j = g.neighbor(i, axis, 1);
      if (j >= 0) EXPECT_EQ(g.neighbor(static_cast<std::size_t>(j), axis, -1), static_cast<long>(i));
    }
}

TEST(Windows, ConeWindowIsScaleInvariantAtTheVertex) {
  const auto cone = ConeTrajectory::standard(3, 2);
  const auto grid = std::make_shared<const WindowGrid>(3, 9, 9);
  const Window a = sample_window(*cone, origin_point(3), 0.5, grid);
  const Window b = sample_window(*cone, origin_point(3, 2.0), 0.01, grid);
  EXPECT_NEAR(l2_distance_sq(a, b), 0.0, 1e-24);
  // The central column sits on the vertex and is masked in every slice.
  EXPECT_DOUBLE_EQ(a.masked_fraction(), 1.0 / static_cast<double>(grid->per_slice()));
}

TEST(Windows, DistanceOfAntipodalConstants) {
  TargetVec p = TargetVec::Zero(3), q = TargetVec::Zero(3);
  p[2] = 1.0;
  q[2] = -1.0;
  const ConstantTrajectory up(2, p), down(2, q);
  const auto grid = std::make_shared<const WindowGrid>(2, 9, 9);
  const Window a = sample_window(up, origin_point(2), 1.0, grid);
  const Window b = sample_window(down, origin_point(2), 1.0, grid);
  EXPECT_NEAR(l2_distance_sq(a, b), 4.0 * grid->volume(), 1e-12);
  EXPECT_DOUBLE_EQ(l2_distance_sq(a, b), l2_distance_sq(b, a));
  EXPECT_EQ(l2_distance_sq(a, a), 0.0);
}

TEST(Windows, SampleMatchesTheField) {
  const auto cone = ConeTrajectory::standard(3, 2, 0.3);
  const auto grid = std::make_shared<const WindowGrid>(3, 7, 5);
  SpatialVec x0(3);
  x0 << 0.1, 0.2, -0.1;
  const SpaceTimePoint X(x0, 0.25);
  const Window w = sample_window(*cone, X, 0.4, grid);
  for (std::size_t i = 0; i < w.size(); i += 7) {
    if (!w.valid[i]) continue;
    const auto v = cone->value({x0 + 0.4 * grid->x(i), 0.25 + 0.16 * grid->t(i)});
    EXPECT_LT((w.value(i) - *v).norm(), 1e-15);
  }
}

TEST(Windows, RecordedRangeAndTorusLimits) {
  const GridSpec g(2, 16, 1.0 / 16, true);
  auto tr = run(random_smooth_data(g, 2, 1), 0.05, 4);
  const auto grid = std::make_shared<const WindowGrid>(2, 7, 7);
  SpatialVec x(2);
  x << 0.5, 0.5;
  EXPECT_THROW(sample_window(*tr, {x, 0.01}, 0.2, grid), RangeViolation);
  EXPECT_NO_THROW(sample_window(*tr, {x, 0.025}, 0.15, grid));
  EXPECT_THROW(sample_window(*tr, {x, 0.025}, 0.3, grid), RangeViolation);
  auto long_run = run(random_smooth_data(g, 2, 1), 0.2, 64);
  EXPECT_THROW(sample_window(*long_run, {x, 0.1}, 0.26, grid), PreconditionError);
}
