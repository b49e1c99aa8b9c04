#include <cmath>

#include <gtest/gtest.h>

#include "qstrat/regularity.hpp"
#include "qstrat/solver.hpp"
#include "qstrat/target.hpp"

using namespace qstrat;

namespace {
// |grad u| = sqrt2/rho and |hess u| = sqrt6/rho^2 for the cone; the binding node is at d - r.
double cone_ratio() {
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-14) {
    const double s = 0.5 * (lo + hi);
    (std::sqrt(2.0) * s + std::sqrt(6.0) * s * s < 1.0 ? lo : hi) = s;
  }
  return lo / (1.0 + lo);
}
}  // namespace

TEST(Regularity, ConstantHitsTheCap) {
  TargetVec p = TargetVec::Zero(3);
  p[2] = 1.0;
  const ConstantTrajectory c(2, p);
  const auto rec = regularity_scale(c, origin_point(2), 0.7, {0.05, 0.0});
  EXPECT_DOUBLE_EQ(rec.r_u, 0.7);
  EXPECT_EQ(rec.binding, Binding::kCap);
  const GridSpec g(2, 8, 0.125, false);
  const auto I = lp_reciprocal_integral(c, 2.0, 0.5, g, TimeAxis{0.0, 0.25, 4});
  EXPECT_DOUBLE_EQ(I.cap_fraction, 1.0);
  EXPECT_GT(I.value, 0.0);
}

TEST(Regularity, ConeScaleIsProportionalToAxisDistance) {
  const auto cone = ConeTrajectory::standard(3, 2);
  const double k = cone_ratio();
  for (double d : {0.1, 0.3}) {
    SpatialVec x = SpatialVec::Zero(3);
    x[1] = d;
    const auto rec = regularity_scale(*cone, {x, 0.0}, 1.0, {d / 25, 0.0});
    EXPECT_NEAR(rec.r_u / d, k, 0.06 * k) << d;
    EXPECT_GT(rec.nodes, 0u);
  }
}

TEST(Regularity, BadSetIsNestedInR) {
  const auto cone = ConeTrajectory::standard(3, 2);
  std::vector<SpaceTimePoint> cloud;
  for (double d : {0.05, 0.1, 0.2, 0.4}) {
    SpatialVec x = SpatialVec::Zero(3);
    x[0] = d;
    cloud.emplace_back(x, 0.0);
  }
  const RegularityOptions opt{0.01, 0.0};
  const auto small = bad_set(*cone, 0.04, cloud, opt);
  const auto large = bad_set(*cone, 0.08, cloud, opt);
  EXPECT_LE(small.size(), large.size());
  for (auto i : small) EXPECT_NE(std::find(large.begin(), large.end(), i), large.end());
  EXPECT_FALSE(large.empty());
  EXPECT_LT(large.size(), cloud.size());
}

TEST(Regularity, RecordedRunUsesItsOwnGrid) {
  const GridSpec g(2, 16, 1.0 / 16, true);
  auto tr = run(random_smooth_data(g, 2, 5), 0.05, 4);
  SpatialVec x(2);
  x << 0.5, 0.5;
  const auto rec = regularity_scale(*tr, {x, 0.04}, 0.15);
  EXPECT_GE(rec.r_u, 4.0 / 16 - 1e-12 > 0.15 ? 0.15 : 0.0);
  EXPECT_LE(rec.r_u, 0.15);
  const double rs = static_reg_scale(tr->snapshots().back(), x, 0.15);
  EXPECT_GT(rs, 0.0);
  EXPECT_LE(rs, 0.15);
}
