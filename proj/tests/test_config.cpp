#include <gtest/gtest.h>

#include <sstream>

#include "numax/config.hpp"
#include "numax/error.hpp"

using namespace numax;

namespace {

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

Errc code_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidParams;  // sentinel: parse unexpectedly succeeded
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  const ScenarioConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.users, (std::array<int, 3>{10, 4, 20}));
  EXPECT_DOUBLE_EQ(cfg.frame_s, 0.000125);
  EXPECT_EQ(cfg.scheduler, SchedulerMode::BestChannel);
  const auto p = cfg.channel_params();
  EXPECT_DOUBLE_EQ(p.link.delta_f_hz, 4000.0);
}

TEST(Config, ParsesKeysCommentsAndBlankLines) {
  const auto cfg = parse(
      "# scenario\n"
      "\n"
      "traffic.voip.users = 25   # trailing comment\n"
      "  traffic.video.users=6\n"
      "scheduler.mode = utility_greedy\n"
      "channel.fading_ar = 0.5\n"
      "channel.shadow_frozen = true\n"
      "sim.seed = 123\n"
      "sim.duration_s = 2.5\n"
      "utility.be.kind = power\n"
      "utility.be.params = 1, 2\n"
      "utility.be.normalize_to = none\n"
      "utility.video.normalize_to = auto\n"
      "report.metric = objective\n"
      "link.quantize_mcs = false\n");
  EXPECT_EQ(cfg.users[class_index(ServiceClass::VoIP)], 25);
  EXPECT_EQ(cfg.users[class_index(ServiceClass::Video)], 6);
  EXPECT_EQ(cfg.users[class_index(ServiceClass::BestEffort)], 20);
  EXPECT_EQ(cfg.scheduler, SchedulerMode::UtilityGreedy);
  ASSERT_TRUE(cfg.fading_ar.has_value());
  EXPECT_DOUBLE_EQ(*cfg.fading_ar, 0.5);
  EXPECT_TRUE(cfg.shadow_frozen);
  EXPECT_EQ(cfg.seed, 123u);
  EXPECT_DOUBLE_EQ(cfg.duration_s, 2.5);
  const auto& be = cfg.utility[class_index(ServiceClass::BestEffort)];
  EXPECT_EQ(be.kind, "power");
  EXPECT_EQ(be.params, (std::vector<double>{1.0, 2.0}));
  ASSERT_TRUE(be.normalize_to_kbps.has_value());
  EXPECT_LT(*be.normalize_to_kbps, 0.0);
  EXPECT_FALSE(cfg.utility[class_index(ServiceClass::Video)].normalize_to_kbps.has_value());
  EXPECT_EQ(cfg.metric, ReportMetric::Objective);
  EXPECT_FALSE(cfg.quantize_mcs);
}

TEST(Config, RejectsBadInput) {
  EXPECT_EQ(code_of("no.such.key = 1\n"), Errc::ConfigError);
  EXPECT_EQ(code_of("traffic.voip.users = ten\n"), Errc::ConfigError);
  EXPECT_EQ(code_of("traffic.voip.users = 2.5\n"), Errc::ConfigError);
  EXPECT_EQ(code_of("scheduler.mode = random\n"), Errc::ConfigError);
  EXPECT_EQ(code_of("channel.shadow_frozen = maybe\n"), Errc::ConfigError);
  EXPECT_EQ(code_of("just some words\n"), Errc::ConfigError);
  EXPECT_EQ(code_of("utility.be.params = 1,,2\n"), Errc::ConfigError);
  EXPECT_EQ(code_of("utility.be.kind = banana\n"), Errc::ConfigError);
}

TEST(Config, ErrorsNameTheLine) {
  try {
    parse("sim.seed = 1\n# ok\nbogus = 2\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, ValidateCatchesInconsistentValues) {
  for (const char* text : {"traffic.be.users = -1\n", "sim.frame_s = 0\n", "sim.duration_s = -1\n",
                           "sim.report_window_s = 0.0001\n", "channel.subcarriers = 0\n",
                           "channel.ber_target = 0.5\n", "channel.speed_mean_mps = -1\n",
                           "channel.fading_taps = 0\n", "utility.voip.unit_kbps = 0\n",
                           "utility.voip.normalize_to = 0\n"}) {
    EXPECT_EQ(code_of(text), Errc::ConfigError) << text;
  }
}

TEST(Config, MissingFileFails) {
  try {
    load_config("/nonexistent/path/scenario.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigError);
  }
}

TEST(Config, KeyListCoversSettableKeys) {
  const auto& keys = config_keys();
  EXPECT_FALSE(keys.empty());
  for (const auto& key : keys) {
    ScenarioConfig cfg;
    // Every listed key must be recognized (a bad value may still be rejected).
    try {
      apply_setting(cfg, key, "1");
    } catch (const Error& e) {
      EXPECT_EQ(std::string(e.what()).find("unknown key"), std::string::npos) << key << ": " << e.what();
    }
  }
}

TEST(NumberList, Parses) {
  EXPECT_EQ(parse_number_list("1, 2.5,-3"), (std::vector<double>{1.0, 2.5, -3.0}));
  EXPECT_EQ(parse_number_list("4"), (std::vector<double>{4.0}));
  EXPECT_THROW(parse_number_list("1,"), Error);
  EXPECT_THROW(parse_number_list("x"), Error);
}

TEST(UtilitySpecFrom, BuildsFamilies) {
  auto s = utility_spec_from("sigmoid", {4.0});
  ASSERT_TRUE(std::holds_alternative<SigmoidSpec>(s));
  EXPECT_DOUBLE_EQ(std::get<SigmoidSpec>(s).x0, 4.0);

  s = utility_spec_from("pf", {});
  ASSERT_TRUE(std::holds_alternative<ProportionalFairnessSpec>(s));
  EXPECT_DOUBLE_EQ(std::get<ProportionalFairnessSpec>(s).c0, 1.0);

  s = utility_spec_from("power", {2.0, 3.0});
  ASSERT_TRUE(std::holds_alternative<PowerSpec>(s));
  EXPECT_DOUBLE_EQ(std::get<PowerSpec>(s).a, 2.0);
  EXPECT_EQ(std::get<PowerSpec>(s).exponent, 3);

  s = utility_spec_from("polynomial", {1.0, 0.5});
  ASSERT_TRUE(std::holds_alternative<PolynomialSpec>(s));
  EXPECT_EQ(std::get<PolynomialSpec>(s).t_coeffs, (std::vector<double>{1.0, 0.5}));

  s = utility_spec_from("exponential_unit", {});
  ASSERT_TRUE(std::holds_alternative<ExponentialSpec>(s));
  EXPECT_TRUE(std::get<ExponentialSpec>(s).unit_branch);

  s = utility_spec_from("linear", {});
  ASSERT_TRUE(std::holds_alternative<LinearSpec>(s));

  EXPECT_THROW(utility_spec_from("power", {1.0, 2.5}), Error);
  EXPECT_THROW(utility_spec_from("sigmoid", {1.0, 2.0, 3.0, 4.0}), Error);
  EXPECT_THROW(utility_spec_from("unknown", {}), Error);
}
