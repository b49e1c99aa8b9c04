#include <cmath>

#include <gtest/gtest.h>

#include "qstrat/strata.hpp"
#include "qstrat/target.hpp"

using namespace qstrat;

namespace {
ScaleBitVector bits_of(std::vector<std::uint8_t> b, const ScaleParams& p) {
  ScaleBitVector v;
  v.bits = std::move(b);
  v.params = p;
  return v;
}
}  // namespace

TEST(Strata, ParameterValidation) {
  ScaleParams p;
  EXPECT_NO_THROW(p.validate());
  EXPECT_NEAR(p.scale(3), std::pow(0.25, 3), 1e-15);
  auto bad = p;
  bad.gamma = 0.5;
  EXPECT_THROW(bad.validate(), PreconditionError);
  bad = p;
  bad.q = 0;
  EXPECT_THROW(bad.validate(), PreconditionError);
  bad = p;
  bad.delta = 0.0;
  EXPECT_THROW(bad.validate(), PreconditionError);
}

TEST(Strata, OnesBound) {
  ScaleParams p;
  p.q = 2;
  p.delta = 0.5;
  EXPECT_EQ(ones_bound(p, 0.0), 2);
  EXPECT_EQ(ones_bound(p, 0.26), 2 + 2);  // floor(5 * 0.26 / 0.5) = 2
}

TEST(Strata, DecomposeGroupsEqualVectors) {
  ScaleParams p;
  p.beta = 4;
  p.delta = 1.0;
  std::vector<ScaleBitVector> v{bits_of({1, 0, 0, 0}, p), bits_of({1, 1, 0, 0}, p), bits_of({1, 0, 0, 0}, p)};
  const auto d = decompose(v, 0.4);
  EXPECT_EQ(d.Q, 2);
  EXPECT_EQ(d.classes.size(), 2u);
  EXPECT_EQ(d.classes.at({1, 0, 0, 0}), (std::vector<std::size_t>{0, 2}));
  v.push_back(bits_of({1, 1, 1, 0}, p));
  EXPECT_THROW(decompose(v, 0.4), InvariantViolation);
  auto q = p;
  q.R = 2.0;
  std::vector<ScaleBitVector> mixed{bits_of({1, 0, 0, 0}, p), bits_of({1, 0, 0, 0}, q)};
  EXPECT_THROW(decompose(mixed, 0.4), PreconditionError);
  EXPECT_TRUE(decompose({}, 1.0).classes.empty());
}

TEST(Strata, DifferentiationBound) {
  ScaleParams p;
  p.delta = 1.0;
  auto b = bits_of({1, 1, 1}, p);
  b.K = 2;
  EXPECT_NO_THROW(check_differentiation_bound(b, 1.0));
  EXPECT_THROW(check_differentiation_bound(b, 0.5), InvariantViolation);
}

TEST(Strata, SelfSimilarFieldsHaveOnlyForcedBits) {
  ScaleParams p{0.25, 1, 0.05, 3, 1.0};
  const StruweQuadrature q{5.0, 0.5, 0.25};
  const auto cone = ConeTrajectory::standard(3, 2);
  const auto b = scale_bits(*cone, origin_point(3), p, q);
  EXPECT_EQ(b.bits, (std::vector<std::uint8_t>{1, 0, 0}));
  EXPECT_EQ(b.K, 0);
  EXPECT_NEAR(b.lambda2, 0.0, 1e-12);
  SpatialVec x = SpatialVec::Zero(3);
  x[0] = 1.5;
  const auto off = scale_bits(*cone, {x, 0.0}, p, q);
  EXPECT_GT(off.lambda2, 0.0);
  for (int a = 0; a < p.beta; ++a) EXPECT_GE(off.W[static_cast<std::size_t>(a)], 0.0);
  EXPECT_LE(off.K, (2 * p.q + 1) * off.lambda2 / p.delta);
}

TEST(Strata, LabelFromLadder) {
  LadderFit fit;
  fit.scales = {1.0, 0.25, 0.0625};
  fit.next_scale = 0.015625;
  fit.by_level = {{0, 0.5, 0.9}, {0, 0.4, 0.8}, {0, 0.1, 0.7}};
  auto l = label_from(fit, 0, 0.3, 0.25);
  EXPECT_TRUE(l.member);
  EXPECT_FALSE(l.witness_scale.has_value());
  l = label_from(fit, 0, 0.3, 0.0625);
  EXPECT_FALSE(l.member);
  EXPECT_EQ(l.witness_scale, 0.0625);
  EXPECT_DOUBLE_EQ(l.witness_distance, 0.1);
  EXPECT_TRUE(label_from(fit, 1, 0.6, 0.0625).member);
  EXPECT_THROW(label_from(fit, 0, 0.3, 0.01), PreconditionError);
  fit.determined = false;
  EXPECT_FALSE(label_from(fit, 0, 0.3, 0.25).determined);
}

TEST(Strata, ConeVertexLiesOnlyInHighStrata) {
  DictionaryConfig cfg;
  cfg.planes_per_dim = 8;
  cfg.refine_rounds = 1;
  cfg.truncations = 5;
  cfg.include_shrinking = false;
  const Dictionary dict(3, 2, cfg);
  const auto grid = std::make_shared<const WindowGrid>(3, 7, 7);
  const auto cone = ConeTrajectory::standard(3, 2);
  const ScaleParams p{0.25, 1, 0.1, 3, 1.0};
  // 2-selfsimilar at every scale: not in S^1, but in S^2.
  EXPECT_FALSE(strata_membership(*cone, origin_point(3), 1, 0.05, 0.0625, p, dict, grid).member);
  EXPECT_TRUE(strata_membership(*cone, origin_point(3), 2, 0.05, 0.0625, p, dict, grid).member);
}
