#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mtlr/mtlr.hpp"

using namespace mtlr;

TEST(Ratios, Arithmetic) {
  Tally t;
  t.violated = 3;
  t.satisfied = 7;
  EXPECT_DOUBLE_EQ(ratio_of_violation(t), 0.3);
  t.violated = 0;
  EXPECT_DOUBLE_EQ(ratio_of_violation(t), 0.0);
  EXPECT_THROW(ratio_of_violation(Tally{}), NoSurvivedPairs);
  EXPECT_DOUBLE_EQ(extended_ratio(50, 100), 0.5);
  EXPECT_THROW(extended_ratio(0, 0), InvalidArgument);
}

TEST(Ratios, ExtendedCountsFailuresAndViolations) {
  Tally t;
  t.satisfied = 5;
  t.violated = 2;
  t.source_failed = 2;
  t.followup_failed = 1;
  t.inapplicable = 4;
  EXPECT_DOUBLE_EQ(extended_ratio(t), 0.5);
}

TEST(Campaign, ControlFaultSatisfiesEverything) {
  CampaignConfig cfg;
  cfg.faults = {"noop"};
  cfg.datasets = 10;
  const auto r = run_campaign(cfg);
  ASSERT_EQ(r.verdicts.size(), 10u * 11u);
  for (const auto& v : r.verdicts) EXPECT_EQ(v.verdict.kind, VerdictKind::satisfied) << to_string(v.mr);
  for (auto mr : all_mrs) EXPECT_EQ(r.ratio_of_violation_for(mr), 0.0);
  EXPECT_EQ(r.rt_extended(), 0.0);
}

TEST(Campaign, ColumnOrderIsCaughtByVariableSwap) {
  CampaignConfig cfg;
  cfg.faults = {"column-order"};
  cfg.mrs = {MrId::MR5_2};
  cfg.datasets = 20;
  const auto r = run_campaign(cfg);
  ASSERT_TRUE(r.ratio_of_violation_for(MrId::MR5_2).has_value());
  EXPECT_GT(*r.ratio_of_violation_for(MrId::MR5_2), 0.0);
}

TEST(Campaign, TotalsMatchRecountAndConserve) {
  CampaignConfig cfg;
  cfg.faults = {"reference", "drop-intercept", "row-overrun", "coef-swap", "intercept-flag-negated"};
  cfg.datasets = 12;
  cfg.workers = 3;
  const auto r = run_campaign(cfg);
  EXPECT_EQ(r.verdicts.size(), cfg.faults.size() * cfg.datasets * all_mrs.size());
  EXPECT_EQ(r.r2.size(), cfg.faults.size() * cfg.datasets);

  const auto summary = summary_json(r);
  for (auto mr : all_mrs) {
    std::size_t sat = 0, vio = 0, sf = 0, ff = 0, ina = 0;
    for (const auto& v : r.verdicts) {
      if (v.mr != mr) continue;
      switch (v.verdict.kind) {
        case VerdictKind::satisfied: ++sat; break;
        case VerdictKind::violated: ++vio; break;
        case VerdictKind::source_failure: ++sf; break;
        case VerdictKind::followup_failure: ++ff; break;
        case VerdictKind::inapplicable: ++ina; break;
      }
    }
    const auto& j = summary["per_mr"][to_string(mr)];
    EXPECT_EQ(j["satisfied"], sat);
    EXPECT_EQ(j["violated"], vio);
    EXPECT_EQ(j["source_failed"], sf);
    EXPECT_EQ(j["followup_failed"], ff);
    EXPECT_EQ(j["inapplicable"], ina);
  }
  for (const auto& [key, t] : r.tallies()) EXPECT_EQ(t.survived() + t.source_failed + t.followup_failed + t.inapplicable, cfg.datasets);
  for (const auto& v : r.verdicts)
    if (v.sut == "reference") {
      EXPECT_EQ(v.verdict.kind, VerdictKind::satisfied);
    }
}

TEST(Campaign, R2ReusesSourceAsFirstCase) {
  CampaignConfig cfg;
  cfg.faults = {"row-overrun", "reference"};
  cfg.datasets = 5;
  const auto r = run_campaign(cfg);
  for (const auto& x : r.r2) {
    if (x.sut == "row-overrun") {
      EXPECT_EQ(x.first, OutcomeStatus::crash);
      EXPECT_EQ(x.second, OutcomeStatus::crash);
    } else {
      EXPECT_FALSE(x.failed());
    }
  }
  for (const auto& v : r.verdicts)
    if (v.sut == "row-overrun") {
      EXPECT_EQ(v.verdict.kind, VerdictKind::source_failure);
    }
}

TEST(Campaign, ConstrainedFormSkipsInterceptRelations) {
  CampaignConfig cfg;
  cfg.faults = {"reference", "coef-swap"};
  cfg.datasets = 8;
  cfg.gen.has_intercept = false;
  const auto r = run_campaign(cfg);
  for (const auto& v : r.verdicts) {
    const bool needs_intercept = v.mr == MrId::MR1_2 || v.mr == MrId::MR4_1 || v.mr == MrId::MR4_2;
    if (needs_intercept) {
      EXPECT_EQ(v.verdict.kind, VerdictKind::inapplicable);
      EXPECT_EQ(v.verdict.discrepancy_sq, 0.0);
    } else {
      EXPECT_NE(v.verdict.kind, VerdictKind::inapplicable);
    }
  }
  EXPECT_FALSE(r.ratio_of_violation_for(MrId::MR4_1).has_value());
}

TEST(Campaign, VerdictLogIsReproducible) {
  CampaignConfig cfg;
  cfg.faults = {"reference", "coef-swap", "skip-odd-rows"};
  cfg.datasets = 6;
  cfg.seed = 99;
  const auto a = verdict_log_json(run_campaign(cfg)).dump();
  cfg.workers = 2;
  const auto b = verdict_log_json(run_campaign(cfg)).dump();
  EXPECT_EQ(a, b);
  cfg.seed = 100;
  EXPECT_NE(a, verdict_log_json(run_campaign(cfg)).dump());
}

TEST(Campaign, StopFlagReturnsPartialResults) {
  CampaignConfig cfg;
  cfg.faults = {"reference"};
  cfg.datasets = 5;
  std::atomic<bool> stop{true};
  const auto r = run_campaign(cfg, &stop);
  EXPECT_TRUE(r.interrupted);
  EXPECT_TRUE(r.verdicts.empty());
}

TEST(Campaign, EquivalentFaultsAreFilteredOut) {
  CampaignConfig cfg;
  cfg.faults = {"noop", "coef-swap"};
  cfg.datasets = 3;
  cfg.equivalence_probes = 20;
  const auto r = run_campaign(cfg);
  ASSERT_EQ(r.equivalence.size(), 2u);
  EXPECT_TRUE(r.equivalence[0].equivalent);
  ASSERT_EQ(r.suts.size(), 1u);
  EXPECT_EQ(r.suts[0].id, "coef-swap");
}

TEST(Campaign, ExternalSutsRunThroughTheHarness) {
  CampaignConfig cfg;
  cfg.external = {std::string(MTLR_FAKE_SUT) + " ref", std::string(MTLR_FAKE_SUT) + " nan"};
  cfg.mrs = {MrId::MR2_1, MrId::MR5_1};
  cfg.datasets = 2;
  const auto r = run_campaign(cfg);
  ASSERT_EQ(r.verdicts.size(), 8u);
  for (const auto& v : r.verdicts) {
    const bool nan_sut = v.sut.ends_with(" nan");
    EXPECT_EQ(v.verdict.kind, nan_sut ? VerdictKind::source_failure : VerdictKind::satisfied) << v.sut;
  }
}

TEST(Reports, FilesAreWritten) {
  CampaignConfig cfg;
  cfg.faults = {"reference", "return-zero"};
  cfg.datasets = 3;
  const auto r = run_campaign(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "mtlr-report-test";
  std::filesystem::remove_all(dir);
  write_reports(r, dir);
  for (const char* f : {"verdicts.json", "report.json", "report.txt", "zoo.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::ifstream is(dir / "report.json");
  const auto j = nlohmann::json::parse(is);
  EXPECT_TRUE(j.contains("rt_baseline"));
  EXPECT_TRUE(j["per_category"].contains("function_return"));
  std::filesystem::remove_all(dir);
}
