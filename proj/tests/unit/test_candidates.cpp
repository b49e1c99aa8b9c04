#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "qstrat/candidates.hpp"
#include "qstrat/target.hpp"

using namespace qstrat;

namespace {
DictionaryConfig small_config() {
  DictionaryConfig c;
  c.planes_per_dim = 8;
  c.refine_rounds = 1;
  c.truncations = 5;
  c.include_shrinking = false;
  return c;
}
}  // namespace

TEST(Candidates, GrassmannianSampleIsOrthonormalAndSeeded) {
  const auto a = grassmannian_sample(4, 2, 10, 3);
  const auto b = grassmannian_sample(4, 2, 10, 3);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].rows(), 2);
    EXPECT_LT((a[i] * a[i].transpose() - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-12);
    EXPECT_EQ((a[i] - b[i]).norm(), 0.0);
  }
}

TEST(Candidates, ComplementSpansTheRest) {
  const auto V = grassmannian_sample(4, 1, 1, 9).front();
  const Basis W = orthogonal_complement(V, 4);
  ASSERT_EQ(W.rows(), 3);
  EXPECT_LT((V * W.transpose()).norm(), 1e-12);
  EXPECT_LT((W * W.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-12);
}

TEST(Candidates, InvariancePlaneDistance) {
  Basis V(1, 3);
  V << 1, 0, 0;
  InvariancePlane P{origin_point(3), V, TimeExtent::kHalfLine, 0.0};
  SpatialVec y(3);
  y << 5.0, 0.3, 0.4;
  EXPECT_NEAR(P.distance({y, -2.0}), 0.5, 1e-12);
  EXPECT_NEAR(P.distance({y, 1.0}), 1.0, 1e-12);  // time part: sqrt(1)
  EXPECT_TRUE(P.contains_direction(y - SpatialVec(Eigen::Vector3d(y[0] - 1.0, y[1], y[2]))));
  EXPECT_FALSE(P.contains_direction(y));
}

TEST(Candidates, SymmetryCountOfStaticAndShrinking) {
  SelfSimilarCandidate c;
  c.m = 3;
  c.plane = Basis(1, 3);
  c.kind = CandidateKind::kStatic;
  EXPECT_EQ(symmetry_count(c), 3);
  c.kind = CandidateKind::kShrinking;
  EXPECT_EQ(symmetry_count(c), 1);
}

TEST(Candidates, ExactFieldsFitTheirOwnFamily) {
  const Dictionary dict(3, 2, small_config());
  const auto grid = std::make_shared<const WindowGrid>(3, 7, 7);
  TargetVec p = TargetVec::Zero(3);
  p[1] = 1.0;
  const ConstantTrajectory c(3, p);
  const auto dc = distances_by_level(sample_window(c, origin_point(3), 1.0, grid), dict);
  ASSERT_EQ(dc.size(), 6u);
  for (double d : dc) EXPECT_NEAR(d, 0.0, 1e-10);

  const auto cone = ConeTrajectory::standard(3, 2);
  const Window w = sample_window(*cone, origin_point(3), 1.0, grid);
  const auto d = distances_by_level(w, dict);
  for (int j = 0; j <= 2; ++j) EXPECT_NEAR(d[static_cast<std::size_t>(j)], 0.0, 1e-6) << j;
  EXPECT_GT(d[3], 0.1);
  for (std::size_t j = 1; j < d.size(); ++j) EXPECT_GE(d[j], d[j - 1]);
  for (int j = 0; j <= 3; ++j) EXPECT_DOUBLE_EQ(best_fit(w, j, dict).distance, d[static_cast<std::size_t>(j)]) << j;
  EXPECT_EQ(best_fit(w, 2, dict).symmetry, 2);
}

TEST(Candidates, EvaluatedCandidateIsItsOwnBestFit) {
  const Dictionary dict(3, 2, small_config());
  const auto grid = std::make_shared<const WindowGrid>(3, 7, 7);
  const auto cone = ConeTrajectory::standard(3, 2);
  const auto fit = best_fit(sample_window(*cone, origin_point(3), 1.0, grid), 2, dict);
  const Window again = evaluate(fit.candidate, grid);
  EXPECT_NEAR(best_fit(again, 2, dict).distance, 0.0, 1e-10);
}

TEST(Candidates, StructureTensorOfTheCone) {
  const auto grid = std::make_shared<const WindowGrid>(3, 9, 9);
  const auto cone = ConeTrajectory::standard(3, 2);
  const auto st = structure_tensor(sample_window(*cone, origin_point(3), 1.0, grid));
  EXPECT_TRUE(st.is_static);
  EXPECT_EQ(st.null_directions, 0);
  EXPECT_EQ(st.symmetry_estimate, 2);
  TargetVec p = TargetVec::Zero(3);
  p[0] = 1.0;
  const ConstantTrajectory c(3, p);
  const auto sc = structure_tensor(sample_window(c, origin_point(3), 1.0, grid));
  EXPECT_EQ(sc.null_directions, 3);
  EXPECT_EQ(sc.symmetry_estimate, 5);
}

TEST(Candidates, RequestsBeyondTheDictionaryThrow) {
  DictionaryConfig cfg = small_config();
  cfg.include_constant = false;
  const Dictionary dict(3, 2, cfg);
  EXPECT_FALSE(dict.supports(5));
  const auto grid = std::make_shared<const WindowGrid>(3, 7, 7);
  const auto cone = ConeTrajectory::standard(3, 2);
  const Window w = sample_window(*cone, origin_point(3), 1.0, grid);
  EXPECT_THROW(best_fit(w, 5, dict), PreconditionError);
  EXPECT_EQ(distances_by_level(w, dict)[5], std::numeric_limits<double>::infinity());
  EXPECT_THROW(Dictionary(5, 2), DimensionMismatch);
}
