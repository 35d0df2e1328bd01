#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "numax/error.hpp"
#include "numax/simulation.hpp"

using namespace numax;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.users = {2, 1, 3};
  cfg.duration_s = 0.3;
  cfg.report_window_s = 0.1;
  cfg.seed = 7;
  return cfg;
}

MetricsRecord record_with(std::size_t window, double utility) {
  MetricsRecord r;
  r.window_index = window;
  ClassMetrics m;
  m.cls = ServiceClass::Video;
  m.users = 1;
  m.avg_utility = utility;
  r.classes.push_back(m);
  return r;
}

}  // namespace

TEST(ClassUtilities, OptimizerViewsPassTheCriterion) {
  const ScenarioConfig cfg;
  const auto utilities = build_class_utilities(cfg);
  EXPECT_DOUBLE_EQ(utilities[class_index(ServiceClass::VoIP)].normalize_to_kbps, 64.0);
  EXPECT_DOUBLE_EQ(utilities[class_index(ServiceClass::Video)].normalize_to_kbps, 512.0);
  // Automatic normalization uses the cell's peak MCS capacity: 256 x 4 kHz x 5.25 bits.
  EXPECT_NEAR(utilities[class_index(ServiceClass::BestEffort)].normalize_to_kbps, 5376.0, 1e-9);
  for (const auto& u : utilities) {
    EXPECT_NEAR(u.report.value(u.normalize_to_kbps), 1.0, 1e-12);
  }
}

// Admissible in its own unit, but not once rescaled to per-subcarrier rates.
TEST(ClassUtilities, NonCompliantFamilyIsRejected) {
  ScenarioConfig cfg;
  cfg.utility[class_index(ServiceClass::BestEffort)] = {"exponential", {2.0}, -1.0, 100.0};
  try {
    build_class_utilities(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonCompliantUtility);
  }
}

TEST(RunScenario, ZeroUsersGivesEmptyWindows) {
  auto cfg = small_config();
  cfg.users = {0, 0, 0};
  const auto result = run_scenario(cfg);
  ASSERT_EQ(result.records.size(), 3u);
  for (const auto& r : result.records) EXPECT_TRUE(r.classes.empty());
}

TEST(RunScenario, StaticChannelGivesConstantThroughput) {
  auto cfg = small_config();
  cfg.users = {0, 0, 1};
  cfg.fading_ar = 1.0;
  cfg.shadow_frozen = true;
  cfg.speed_mean_mps = 0.0;
  cfg.speed_std_mps = 0.0;
  const auto result = run_scenario(cfg);
  ASSERT_EQ(result.records.size(), 3u);
  const double first = result.records[0].classes.at(0).avg_throughput_bps;
  EXPECT_GT(first, 0.0);
  for (const auto& r : result.records) EXPECT_NEAR(r.classes.at(0).avg_throughput_bps / first, 1.0, 0.01);
}

TEST(RunScenario, MetricsAreBoundedAndAuditHolds) {
  for (auto mode : {SchedulerMode::BestChannel, SchedulerMode::UtilityGreedy}) {
    auto cfg = small_config();
    cfg.scheduler = mode;
    const auto result = run_scenario(cfg);
    ASSERT_EQ(result.records.size(), 3u);
    for (const auto& r : result.records) {
      ASSERT_EQ(r.classes.size(), 3u);
      for (const auto& c : r.classes) {
        EXPECT_TRUE(std::isfinite(c.avg_utility));
        EXPECT_GE(c.avg_utility, 0.0);
        EXPECT_LE(c.avg_utility, 1.0);
        EXPECT_GE(c.avg_throughput_bps, 0.0);
        EXPECT_GE(c.drop_rate, 0.0);
        EXPECT_LE(c.drop_rate, 1.0);
      }
      // A handful of full-buffer users cannot saturate a capacity-normalized utility.
      EXPECT_LT(r.classes[2].avg_utility, 1.0);
    }
    const auto& a = result.audit;
    EXPECT_EQ(a.frames, 2400);
    EXPECT_EQ(a.allocations, 300);
    EXPECT_LE(a.max_power_excess, 1e-9);
    EXPECT_EQ(a.partition_checks, a.allocations);
    EXPECT_EQ(a.capacity_checks, a.frames * 6);
  }
}

TEST(RunScenario, PartialFinalWindowIsReported) {
  auto cfg = small_config();
  cfg.users = {1, 0, 1};
  cfg.duration_s = 0.25;
  EXPECT_EQ(run_scenario(cfg).records.size(), 3u);
}

TEST(RunScenario, SameSeedSameCsv) {
  auto cfg = small_config();
  std::ostringstream a, b;
  write_metrics_csv(a, run_scenario(cfg).records);
  write_metrics_csv(b, run_scenario(cfg).records);
  EXPECT_EQ(a.str(), b.str());
  cfg.seed = 8;
  std::ostringstream c;
  write_metrics_csv(c, run_scenario(cfg).records);
  EXPECT_NE(a.str(), c.str());
}

TEST(AverageUtility, HandComputedInterval) {
  const std::vector<MetricsRecord> records{record_with(0, 0.2), record_with(1, 0.4), record_with(2, 0.9)};
  const auto s = average_utility(records, ServiceClass::Video);
  EXPECT_NEAR(s.mean, 0.5, 1e-15);
  // 1.96 * sample sd / sqrt(3), sample sd = sqrt(0.13).
  EXPECT_NEAR(s.ci95, 0.40800653589536207, 1e-12);
}

TEST(AverageUtility, DegenerateSeries) {
  const std::vector<MetricsRecord> constant{record_with(0, 0.3), record_with(1, 0.3), record_with(2, 0.3)};
  EXPECT_NEAR(average_utility(constant, ServiceClass::Video).ci95, 0.0, 1e-15);
  const std::vector<MetricsRecord> single{record_with(0, 0.7)};
  const auto s = average_utility(single, ServiceClass::Video);
  EXPECT_DOUBLE_EQ(s.mean, 0.7);
  EXPECT_DOUBLE_EQ(s.ci95, 0.0);
  try {
    average_utility(single, ServiceClass::VoIP);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyInput);
  }
}

TEST(Sweep, RowsAndDeterminism) {
  auto cfg = small_config();
  cfg.duration_s = 0.1;
  cfg.report_window_s = 0.05;
  const std::vector<int> values{1, 3};
  const auto first = sweep(cfg, "traffic.voip.users", values, 2, 1);
  // Two values x three classes.
  ASSERT_EQ(first.rows.size(), 6u);
  EXPECT_DOUBLE_EQ(first.rows[0].param_value, 1.0);
  EXPECT_EQ(first.rows[0].cls, ServiceClass::VoIP);
  EXPECT_DOUBLE_EQ(first.rows[5].param_value, 3.0);
  EXPECT_EQ(first.rows[5].cls, ServiceClass::BestEffort);
  EXPECT_LE(first.audit.max_power_excess, 1e-9);

  const auto again = sweep(cfg, "traffic.voip.users", values, 2, 2);
  std::ostringstream a, b;
  write_sweep_csv(a, first.rows);
  write_sweep_csv(b, again.rows);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Sweep, EmptyAndInvalid) {
  auto cfg = small_config();
  EXPECT_TRUE(sweep(cfg, "traffic.be.users", {}, 3).rows.empty());
  EXPECT_THROW(sweep(cfg, "channel.subcarriers", {1}, 1), Error);
  EXPECT_THROW(sweep(cfg, "traffic.be.users", {1}, 0), Error);
  EXPECT_TRUE(is_sweepable("traffic.video.users"));
  EXPECT_FALSE(is_sweepable("sim.seed"));
}

TEST(Csv, Headers) {
  std::ostringstream m, s;
  write_metrics_csv(m, {});
  write_sweep_csv(s, {});
  EXPECT_EQ(m.str(), "window,class,avg_utility,avg_throughput_bps,drop_rate\n");
  EXPECT_EQ(s.str(), "param_value,class,mean_utility,ci95,mean_throughput_bps,drop_rate\n");
}
