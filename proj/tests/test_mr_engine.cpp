#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mtlr/mtlr.hpp"

using namespace mtlr;

namespace {

Dataset line_data() { return Dataset::from_rows({{1, 3}, {3, 7}, {5, 11}}); }

GeneratedDataset draw(std::uint64_t seed, bool intercept = true) {
  GenSpec s;
  s.seed = seed;
  s.has_intercept = intercept;
  return generate(s);
}

}  // namespace

TEST(Followup, SampleSwapOnLineData) {
  const auto g = make_followup(MrId::MR5_1, line_data(), std::nullopt, transforms::PermuteSamples{{2, 1, 0}});
  EXPECT_TRUE(g.followups.front() == Dataset::from_rows({{5, 11}, {3, 7}, {1, 3}}));
}

TEST(Followup, CentroidIsAppended) {
  const auto g = make_followup(MrId::MR1_2, line_data(), std::nullopt, transforms::InsertCentroid{});
  EXPECT_TRUE(g.followups.front() == Dataset::from_rows({{1, 3}, {3, 7}, {5, 11}, {3, 7}}));
}

TEST(Followup, PredictedPointIsAppended) {
  const auto spec = transforms::InsertPoint{Eigen::VectorXd::Constant(1, 7.0), std::nullopt};
  const auto g = make_followup(MrId::MR1_1, line_data(), Estimator::of({1, 2}), spec);
  EXPECT_TRUE(g.followups.front() == Dataset::from_rows({{1, 3}, {3, 7}, {5, 11}, {7, 15}}));
  EXPECT_TRUE(g.source_output_dependent);
  EXPECT_THROW(make_followup(MrId::MR1_1, line_data(), std::nullopt, spec), MissingSourceOutput);
}

TEST(Followup, ConstrainedFormRejectsInterceptRelations) {
  const auto ds = Dataset::from_rows({{1, 2}, {2, 4}, {3, 7}}, false);
  Rng rng(1);
  for (auto mr : {MrId::MR1_2, MrId::MR4_1, MrId::MR4_2}) {
    EXPECT_FALSE(applicable(mr, false));
    EXPECT_THROW(make_followup(mr, ds, Estimator::of({2}, false), rng), Inapplicable);
  }
  for (auto mr : {MrId::MR1_1, MrId::MR2_1, MrId::MR3_1, MrId::MR5_1}) EXPECT_TRUE(applicable(mr, false));
}

TEST(Followup, SpecShapeIsEnforced) {
  EXPECT_THROW(make_followup(MrId::MR2_1, line_data(), std::nullopt, transforms::Scale{2, 1, 0}), InvalidArgument);
  EXPECT_THROW(make_followup(MrId::MR5_2, line_data(), std::nullopt, transforms::Rotate{1, 2, 0.1}), InvalidArgument);
}

TEST(Followup, TwoVariableRelationsNeedTwoVariables) {
  Rng rng(2);
  EXPECT_THROW(make_followup(MrId::MR5_2, line_data(), std::nullopt, rng), Inapplicable);
  EXPECT_THROW(make_followup(MrId::MR6, line_data(), std::nullopt, rng), Inapplicable);
}

// Cell-by-cell check that the follow-up differs from the source exactly as
// the drawn spec prescribes.
TEST(Followup, StructureMatchesSpec) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = draw(seed);
    const auto src = fit(g.ds);
    for (auto mr : all_mrs) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(mr)));
      const auto mtg = make_followup(mr, g.ds, src, rng);
      const auto& f = mtg.followups.front();
      const auto& s = g.ds;
      std::visit(
          [&](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            using namespace transforms;
            if constexpr (std::is_same_v<T, InsertPoint> || std::is_same_v<T, InsertCentroid>) {
              ASSERT_EQ(f.n(), s.n() + 1);
              EXPECT_EQ(f.x.topRows(s.x.rows()), s.x);
              EXPECT_EQ(f.y.head(s.y.size()), s.y);
            } else if constexpr (std::is_same_v<T, Scale>) {
              EXPECT_EQ(f.y, s.y * t.a);
              for (Eigen::Index j = 0; j < s.x.cols(); ++j) {
                const double b = (t.b != 1.0 && static_cast<std::size_t>(j) == t.k - 1) ? t.b : 1.0;
                EXPECT_EQ(f.x.col(j), s.x.col(j) * b);
              }
            } else if constexpr (std::is_same_v<T, Shift>) {
              EXPECT_EQ(f.y, (s.y.array() + t.a).matrix());
              for (Eigen::Index j = 0; j < s.x.cols(); ++j) {
                const double b = (t.b != 0.0 && static_cast<std::size_t>(j) == t.k - 1) ? t.b : 0.0;
                EXPECT_EQ(f.x.col(j), (s.x.col(j).array() + b).matrix());
              }
            } else if constexpr (std::is_same_v<T, PermuteSamples>) {
              int moved = 0;
              for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
                const auto src_row = static_cast<Eigen::Index>(t.order[static_cast<std::size_t>(i)]);
                EXPECT_EQ(f.x.row(i), s.x.row(src_row));
                EXPECT_EQ(f.y(i), s.y(src_row));
                moved += src_row != i;
              }
              EXPECT_EQ(moved, 2);
            } else if constexpr (std::is_same_v<T, SwapVariables>) {
              EXPECT_EQ(f.x.col(static_cast<Eigen::Index>(t.p - 1)), s.x.col(static_cast<Eigen::Index>(t.q - 1)));
              EXPECT_EQ(f.x.col(static_cast<Eigen::Index>(t.q - 1)), s.x.col(static_cast<Eigen::Index>(t.p - 1)));
              EXPECT_EQ(f.y, s.y);
            } else if constexpr (std::is_same_v<T, Rotate>) {
              const auto p = static_cast<Eigen::Index>(t.p - 1), q = static_cast<Eigen::Index>(t.q - 1);
              for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
                EXPECT_EQ(f.x(i, p), s.x(i, p) * std::cos(t.theta) - s.x(i, q) * std::sin(t.theta));
                EXPECT_EQ(f.x(i, q), s.x(i, p) * std::sin(t.theta) + s.x(i, q) * std::cos(t.theta));
              }
              EXPECT_EQ(f.y, s.y);
            } else {
              ADD_FAILURE() << "unexpected transform";
            }
          },
          mtg.spec);
    }
  }
}

TEST(Followup, InvolutionsRoundTrip) {
  const auto g = draw(3);
  Rng rng(4);
  for (auto mr : {MrId::MR2_1, MrId::MR2_2, MrId::MR5_1, MrId::MR5_2}) {
    const auto spec = draw_transform(mr, g.ds, rng);
    EXPECT_TRUE(apply_transform(apply_transform(g.ds, spec), spec) == g.ds) << to_string(mr);
  }
  const transforms::Rotate r{1, 2, 0.7};
  const auto back = apply_transform(apply_transform(g.ds, r), transforms::Rotate{1, 2, -0.7});
  EXPECT_LT((back.x - g.ds.x).cwiseAbs().maxCoeff(), 1e-12 * g.ds.x.cwiseAbs().maxCoeff());
}

TEST(ExpectedOutput, Examples) {
  EXPECT_EQ(expected_followup_output(MrId::MR2_1, transforms::Scale{-1, 1, 0}, Estimator::of({1, 2})).beta,
            Eigen::Vector2d(-1, -2));
  EXPECT_EQ(expected_followup_output(MrId::MR3_1, transforms::Scale{3, 1, 0}, Estimator::of({1, 2})).beta,
            Eigen::Vector2d(3, 6));
  const auto rot = expected_followup_output(MrId::MR6, transforms::Rotate{1, 2, std::numbers::pi / 2},
                                            Estimator::of({0.25, 1, 0}));
  EXPECT_NEAR(rot.beta(0), 0.25, 1e-15);
  EXPECT_NEAR(rot.beta(1), 0.0, 1e-15);
  EXPECT_NEAR(rot.beta(2), 1.0, 1e-15);
  EXPECT_THROW(expected_followup_output(MrId::MR4_1, transforms::Shift{1, 0, 0}, Estimator::of({1}, false)),
               Inapplicable);
}

TEST(ExpectedOutput, QuarterTurnAgreesWithRefit) {
  // y = 0.25 + x1 exactly; rotating (x1, x2) by pi/2 moves the weight to x2.
  Dataset ds = Dataset::from_rows({{1, 0, 1.25}, {2, 1, 2.25}, {0, 3, 0.25}, {4, -1, 4.25}, {3, 2, 3.25}});
  const auto src = fit(ds);
  const transforms::Rotate r{1, 2, std::numbers::pi / 2};
  const auto refit = fit(apply_transform(ds, r));
  EXPECT_NEAR(refit.beta(0), 0.25, 1e-12);
  EXPECT_NEAR(refit.beta(1), 0.0, 1e-12);
  EXPECT_NEAR(refit.beta(2), 1.0, 1e-12);
  const auto expected = expected_followup_output(MrId::MR6, r, src);
  EXPECT_LE((expected.beta - refit.beta).norm(), std::hypot(expected.delta_norm(), refit.delta_norm()));
}

TEST(Judge, Examples) {
  const auto e = Estimator::of({1, 2});
  EXPECT_EQ(judge(MrId::MR5_1, e, e, {1, 0, 0}, {1, 0, 0}).kind, VerdictKind::satisfied);
  ErrorBound b{1, 0, 0.1};
  EXPECT_EQ(judge(MrId::MR5_1, e, Estimator::of({1, 2.1}), b, b).kind, VerdictKind::satisfied);
  EXPECT_EQ(judge(MrId::MR5_1, e, Estimator::of({1, 2.2}), b, b).kind, VerdictKind::violated);
  EXPECT_EQ(judge(MrId::MR5_1, e, Estimator::of({1, std::nan("")}), b, b).kind, VerdictKind::violated);
  EXPECT_THROW(judge(MrId::MR5_1, e, Estimator::of({1, 2, 3}), b, b), DimensionMismatch);
}

TEST(RunMtg, NanSourceIsSourceFailure) {
  const auto g = draw(1);
  const auto sut = in_process_sut("zero-divisor", Fault::zero_divisor);
  Rng rng(1);
  const auto run = run_mtg(sut, MrId::MR2_1, g.ds, draw_transform(MrId::MR2_1, g.ds, rng));
  EXPECT_EQ(run.verdict.kind, VerdictKind::source_failure);
}

TEST(RunMtg, WrongSizedFollowupIsFollowupFailure) {
  const auto g = draw(1);
  const auto ref = reference_sut();
  const auto src = execute(ref, g.ds);
  const auto bad = in_process_sut("intercept-flag-negated", Fault::intercept_flag_negated);
  Rng rng(1);
  const auto run = run_mtg(bad, MrId::MR2_1, g.ds, draw_transform(MrId::MR2_1, g.ds, rng), {}, &src);
  EXPECT_EQ(run.verdict.kind, VerdictKind::followup_failure);
  EXPECT_EQ(run.followup->status, OutcomeStatus::wrong_size);
}

TEST(RunMtg, ReferenceSatisfiesShiftRelation) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = draw(seed);
    Rng rng(seed);
    const auto run = run_mtg(reference_sut(), MrId::MR4_2, g.ds, draw_transform(MrId::MR4_2, g.ds, rng));
    EXPECT_EQ(run.verdict.kind, VerdictKind::satisfied) << run.verdict.discrepancy_sq << " > " << run.verdict.tolerance_sq;
  }
}

TEST(RunMtg, ConstrainedFormIsInapplicable) {
  const auto g = draw(1, false);
  const auto run = run_mtg(reference_sut(), MrId::MR4_1, g.ds, transforms::Shift{1, 0, 0});
  EXPECT_EQ(run.verdict.kind, VerdictKind::inapplicable);
  EXPECT_FALSE(run.source.has_value());
}

TEST(MrIds, ParseAndPrint) {
  for (auto mr : all_mrs) EXPECT_EQ(parse_mr(to_string(mr)), mr);
  EXPECT_EQ(parse_mr("mr1_1"), MrId::MR1_1);
  EXPECT_EQ(parse_mr("6"), MrId::MR6);
  EXPECT_FALSE(parse_mr("MR7").has_value());
}

TEST(Audit, SpecJsonRoundTrip) {
  const auto g = draw(5);
  const auto src = fit(g.ds);
  for (auto mr : all_mrs) {
    Rng rng(static_cast<std::uint64_t>(mr) + 1);
    const auto mtg = make_followup(mr, g.ds, src, rng);
    const auto j = to_json(mtg.spec);
    EXPECT_EQ(to_json(transform_from_json(j)), j);
    EXPECT_TRUE(apply_transform(g.ds, transform_from_json(j)) == mtg.followups.front()) << to_string(mr);
    const auto rec = mtg_record(mtg, "src.csv", "fu.csv");
    EXPECT_EQ(rec["mr"], to_string(mr));
  }
}
