#include <gtest/gtest.h>

#include <cmath>

#include "mtlr/mtlr.hpp"
#include "oracles.hpp"

using namespace mtlr;

TEST(ConditionNumber, OrthonormalColumnsGiveOne) {
  Dataset ds;
  ds.has_intercept = false;
  ds.x = Eigen::MatrixXd::Zero(4, 2);
  ds.x(0, 0) = ds.x(1, 0) = 1.0 / std::sqrt(2.0);
  ds.x(2, 1) = ds.x(3, 1) = 1.0 / std::sqrt(2.0);
  ds.y = Eigen::VectorXd::Ones(4);
  EXPECT_NEAR(condition_number(ds), 1.0, 1e-14);
}

TEST(ConditionNumber, DiagonalDesign) {
  Dataset ds;
  ds.has_intercept = false;
  ds.x = Eigen::Vector2d(10, 1).asDiagonal();
  ds.y = Eigen::Vector2d(1, 1);
  EXPECT_NEAR(condition_number(ds), 10.0, 1e-13);
}

TEST(ConditionNumber, MatchesEigenvalueOracle) {
  GenSpec s;
  s.d_range = {3, 3};
  s.n_range = {20, 20};
  s.has_intercept = false;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    s.seed = seed;
    const auto g = generate(s);
    const double k = condition_number(g.ds);
    EXPECT_NEAR(k / oracle::condition_number(g.ds), 1.0, 1e-6) << "seed " << seed;
  }
}

TEST(ConditionNumber, RankDeficientThrows) {
  Dataset ds;
  ds.has_intercept = false;
  ds.x = Eigen::MatrixXd::Ones(4, 2);
  ds.y = Eigen::VectorXd::Ones(4);
  EXPECT_THROW(condition_number(ds), RankDeficient);
}

TEST(ForwardBound, ExactFitWithUnitConditionNumber) {
  // Orthonormal design, y = A (1, 2): zero residual and kappa = 1.
  Dataset ds;
  ds.has_intercept = false;
  ds.x = Eigen::MatrixXd::Zero(4, 2);
  ds.x(0, 0) = ds.x(1, 0) = 1.0 / std::sqrt(2.0);
  ds.x(2, 1) = ds.x(3, 1) = 1.0 / std::sqrt(2.0);
  const Eigen::Vector2d beta(1, 2);
  ds.y = ds.x * beta;
  const auto b = forward_bound(ds, Estimator::exact(beta, false));
  const double c = 10.0 * (4 + 2 + 1);
  EXPECT_NEAR(b.kappa, 1.0, 1e-14);
  EXPECT_NEAR(b.delta_norm, c * unit_roundoff * beta.norm(), 1e-12 * c * unit_roundoff);
}

TEST(ForwardBound, SafetyFactorOverride) {
  const auto ds = Dataset::from_rows({{1, 3}, {3, 7}, {5, 11}});
  const auto est = Estimator::of({1, 2});
  const auto a = forward_bound(ds, est, BoundConfig{std::nullopt});
  const auto b = forward_bound(ds, est, BoundConfig{2.0 * 10.0 * (3 + 1 + 1)});
  EXPECT_NEAR(b.delta_norm / a.delta_norm, 2.0, 1e-12);
}

TEST(ForwardBound, ScalesWithResponse) {
  GenSpec s;
  s.seed = 4;
  const auto g = generate(s);
  const auto e = fit(g.ds);
  Dataset scaled = g.ds;
  scaled.y *= 10.0;
  const auto e10 = fit(scaled);
  EXPECT_NEAR(e10.delta_norm() / e.delta_norm(), 10.0, 1e-6);
}

TEST(ForwardBound, ZeroEstimatorUsesResponseNorm) {
  const auto ds = Dataset::from_rows({{1, 0}, {2, 0}, {3, 1}});
  const auto b = forward_bound(ds, Estimator::of({0, 0}));
  EXPECT_GT(b.delta_norm, 0.0);
  EXPECT_TRUE(std::isfinite(b.delta_norm));
}

TEST(ForwardBound, DominatesExtendedPrecisionError) {
  GenSpec s;
  s.d_range = {4, 4};
  s.n_range = {50, 50};
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    s.seed = seed;
    const auto g = generate(s);
    const auto e = fit(g.ds);
    EXPECT_LE((e.beta - oracle::extended_fit(g.ds)).norm(), e.delta_norm()) << "seed " << seed;
  }
}

TEST(ForwardBound, MonotoneInConditionNumber) {
  double last = 0.0;
  for (double kappa : {1.0, 10.0, 1e3, 1e6, 1e9}) {
    const double v = detail::first_order_bound(1e-14, kappa, 5.0, 5.0 / kappa, 3.0, 0.5, 10.0);
    EXPECT_GE(v, last);
    last = v;
  }
}

TEST(ForwardBound, SizeMismatchThrows) {
  const auto ds = Dataset::from_rows({{1, 3}, {3, 7}, {5, 11}});
  EXPECT_THROW(forward_bound(ds, Estimator::of({1, 2, 3})), DimensionMismatch);
}
