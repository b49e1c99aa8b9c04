#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "qstrat/analysis.hpp"
#include "qstrat/solver.hpp"
#include "qstrat/target.hpp"

using namespace qstrat;

namespace {
std::vector<SpaceTimePoint> random_points(int m, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<SpaceTimePoint> pts;
  for (std::size_t i = 0; i < count; ++i) {
    SpatialVec x(m);
    for (int a = 0; a < m; ++a) x[a] = u(rng);
    pts.emplace_back(x, 0.3 * u(rng));
  }
  return pts;
}

DictionaryConfig small_config() {
  DictionaryConfig c;
  c.planes_per_dim = 8;
  c.refine_rounds = 1;
  c.truncations = 5;
  c.include_shrinking = false;
  return c;
}
}  // namespace

TEST(Analysis, GreedyCoverCoversAndSeparates) {
  const auto pts = random_points(2, 300, 4);
  const double r = 0.3;
  const auto centers = greedy_cover(pts, r);
  for (const auto& p : pts) {
    double best = 1e9;
    for (auto c : centers) best = std::min(best, parabolic_distance(p, pts[c]));
    EXPECT_LT(best, r);
  }
  for (std::size_t a = 0; a < centers.size(); ++a)
    for (std::size_t b = a + 1; b < centers.size(); ++b)
      EXPECT_GE(parabolic_distance(pts[centers[a]], pts[centers[b]]), r);
  EXPECT_EQ(centers, greedy_cover(pts, r));
}

TEST(Analysis, CoverCalibration) {
  const auto cal = calibrate_cover_constant(1, 0.25);
  EXPECT_EQ(cal.lattice_points, full_ball_lattice(1, 0.25).size());
  EXPECT_GT(cal.cover_count, 0u);
  EXPECT_NEAR(cal.c, static_cast<double>(cal.cover_count) * std::pow(0.25, 3), 1e-12);
}

// Points on a spatial segment, all members, no energetic scales.
TEST(Analysis, RecursiveCoverOfASegment) {
  std::vector<CoverPoint> pts;
  for (int i = 0; i < 200; ++i) {
    SpatialVec x = SpatialVec::Zero(2);
    x[0] = -0.5 + i / 200.0;
    pts.push_back({SpaceTimePoint(x, 0.0), {1, 1, 1, 1}, {0, 0, 0}});
  }
  CoverOptions opt;
  opt.beta_max = 3;
  const auto tree = recursive_cover(pts, opt);
  ASSERT_EQ(tree.per_depth.size(), 4u);
  for (std::size_t d = 1; d < tree.per_depth.size(); ++d) EXPECT_GE(tree.per_depth[d], tree.per_depth[d - 1]);
  EXPECT_EQ(tree.max_bad_steps, 1);  // only the depth-0 step
  for (const auto& n : tree.nodes) EXPECT_EQ(n.good_scale, n.depth > 1) << n.depth;
  // A segment has parabolic dimension 1: the finest level grows like gamma^-1 per step.
  EXPECT_LT(tree.per_depth[3], 4 * 4 * 4 * std::max<std::size_t>(tree.per_depth[0], 1) * 4);
  const auto cal = calibrate_cover_constant(2, 0.25);
  EXPECT_TRUE(check_cover_bound(tree, 2, 1, cal.c).holds);

  pts.front().bits.pop_back();
  EXPECT_THROW(recursive_cover(pts, opt), PreconditionError);
}

TEST(Analysis, PowerLawFit) {
  const std::vector<double> r{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> v;
  for (double x : r) v.push_back(3.0 * std::pow(x, 2.5));
  const auto f = fit_power_law(r, v, 3);
  EXPECT_NEAR(f.slope, 2.5, 1e-12);
  EXPECT_NEAR(f.dimension, 2.5, 1e-12);
  EXPECT_NEAR(f.residual, 0.0, 1e-12);
  EXPECT_THROW(fit_power_law(std::vector<double>{0.5, 0.25, 0.125}, std::vector<double>{1, 1, 1}, 3),
               PreconditionError);
  EXPECT_THROW(fit_power_law(std::vector<double>{0.5, 0.4, 0.3, 0.2}, std::vector<double>{1, 1, 1, 1}, 3),
               PreconditionError);
}

// A single point has slope m+2; a static line in time has slope m.
TEST(Analysis, MinkowskiFitOfSimpleSets) {
  const std::vector<double> radii{0.4, 0.2, 0.1, 0.05};
  const GridSpec g(1, 8, 0.25, false, SpatialVec::Constant(1, -0.875));
  const TimeAxis time{-0.5, 0.25, 4};
  const std::vector<SpaceTimePoint> point{origin_point(1)};
  EXPECT_NEAR(minkowski_fit(point, radii, g, time).slope, 3.0, 0.15);
  std::vector<SpaceTimePoint> line;
  for (int k = -80; k <= 80; ++k) line.emplace_back(SpatialVec::Zero(1), k / 160.0);
  EXPECT_NEAR(minkowski_fit(line, radii, g, TimeAxis{-0.25, 0.125, 4}).slope, 1.0, 0.25);
}

TEST(Analysis, NoisyTrajectoryStaysOnTheSphere) {
  std::shared_ptr<const Trajectory> cone = ConeTrajectory::standard(3, 2);
  const NoisyTrajectory a(cone, 0.05, 3), b(cone, 0.05, 3), zero(cone, 0.0, 3);
  const SpaceTimePoint X(SpatialVec::Constant(3, 0.3), 0.1);
  EXPECT_NEAR(a.value(X)->norm(), 1.0, 1e-12);
  EXPECT_EQ(*a.value(X), *b.value(X));
  EXPECT_GT((*a.value(X) - *cone->value(X)).norm(), 0.0);
  EXPECT_LT((*zero.value(X) - *cone->value(X)).norm(), 1e-15);
}

TEST(Analysis, QuasistaticPropagation) {
  const Dictionary dict(3, 2, small_config());
  const auto grid = std::make_shared<const WindowGrid>(3, 7, 7);
  TargetVec after = TargetVec::Zero(3);
  after[2] = 1.0;
  const auto qs = make_analytic(AnalyticKind::kQuasistaticCone, AnalyticParams{3, 2, after, 1.0, nullptr});
  InvariancePlane W{origin_point(3, 1.0), Basis(0, 3), TimeExtent::kHalfLine, 1.0};
  const auto res = quasistatic_propagation_check(*qs, W, origin_point(3, 0.0), 0.25, 1e-6, dict, grid);
  EXPECT_TRUE(res.selfsimilar);
  EXPECT_NEAR(res.distance, 0.0, 1e-8);
  EXPECT_THROW(quasistatic_propagation_check(*qs, W, origin_point(3, 0.9), 0.25, 1e-6, dict, grid),
               PreconditionError);
  W.extent = TimeExtent::kFullLine;
  EXPECT_THROW(quasistatic_propagation_check(*qs, W, origin_point(3, 0.0), 0.25, 1e-6, dict, grid),
               PreconditionError);
}

TEST(Analysis, CorrelationRowsAreMonotone) {
  const Dictionary dict(3, 2, small_config());
  const auto grid = std::make_shared<const WindowGrid>(3, 7, 7);
  const auto cone = ConeTrajectory::standard(3, 2);
  std::vector<SpaceTimePoint> cloud;
  for (double d : {0.05, 0.1, 0.2, 0.4, 0.8}) cloud.emplace_back(SpatialVec::Constant(3, d), 0.0);
  const std::vector<double> scale{0.1}, eps{0.01, 0.1, 1.0};
  const auto rep = eps_regularity_correlation(*cone, cloud, scale, 3, eps, dict, grid, {0.01, 0.0});
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.samples.size(), cloud.size());
  for (std::size_t k = 1; k < rep.rows.size(); ++k) EXPECT_GE(rep.rows[k].close, rep.rows[k - 1].close);
  for (const auto& row : rep.rows) EXPECT_LE(row.violations, row.close);
}
