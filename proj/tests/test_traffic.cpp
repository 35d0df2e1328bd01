#include <gtest/gtest.h>

#include <cmath>

#include "numax/error.hpp"
#include "numax/traffic.hpp"

using namespace numax;

namespace {

// Draws sessions until one starts in the requested VoIP phase with at
// least `min_residual` seconds left.
TrafficSession voip_in_phase(const TrafficParams& params, bool on, double min_residual) {
  for (std::uint64_t seed = 1;; ++seed) {
    Rng rng(seed);
    TrafficSession s(ServiceClass::VoIP, params, nullptr, rng);
    if (s.on() == on && s.residual() >= min_residual) return s;
  }
}

}  // namespace

TEST(TruncatedExponential, SolvedRateMatchesReference) {
  // Root of mean(lambda) = 180 on [64, 256], found offline by bisection in
  // 30-digit arithmetic.
  const TruncatedExponential d(64.0, 256.0, 180.0);
  EXPECT_NEAR(d.lambda(), -0.00668722407284284331925797059171, 1e-9);
  EXPECT_LT(d.lambda(), 0.0);
  EXPECT_NEAR(TruncatedExponential::mean_for(d.lambda(), 64.0, 256.0), 180.0, 1e-6);
}

TEST(TruncatedExponential, MidpointIsUniform) {
  const TruncatedExponential d(64.0, 256.0, 160.0);
  EXPECT_NEAR(d.lambda(), 0.0, 1e-9);
  EXPECT_NEAR(TruncatedExponential::mean_for(0.0, 64.0, 256.0), 160.0, 1e-12);
}

TEST(TruncatedExponential, UnreachableMeanFails) {
  for (double mean : {64.0, 256.0, 300.0, 10.0}) {
    try {
      TruncatedExponential(64.0, 256.0, mean);
      FAIL() << mean;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::SolverFailure);
    }
  }
  // Means near an edge need a steep density but remain reachable.
  const TruncatedExponential steep(64.0, 256.0, 65.0);
  EXPECT_NEAR(TruncatedExponential::mean_for(steep.lambda(), 64.0, 256.0), 65.0, 1e-6);
}

TEST(TruncatedExponential, SampleStatistics) {
  const TruncatedExponential d(64.0, 256.0, 180.0);
  Rng rng(99);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = sample_truncated_exp_rate(d, rng);
    ASSERT_GE(x, 64.0);
    ASSERT_LE(x, 256.0);
    sum += x;
  }
  EXPECT_NEAR(sum / n, 180.0, 0.5);
}

TEST(StepTraffic, VoipOffProducesNothing) {
  TrafficParams params;
  auto s = voip_in_phase(params, false, 0.2);
  Rng rng(1);
  EXPECT_EQ(step_traffic(s, 0.1, 0.0, rng), 0);
  EXPECT_TRUE(s.queue().empty());
}

TEST(StepTraffic, VoipOnProducesRateTimesDt) {
  TrafficParams params;
  auto s = voip_in_phase(params, true, 0.2);
  Rng rng(1);
  EXPECT_EQ(step_traffic(s, 0.1, 2.0, rng), 3200);
  ASSERT_EQ(s.queue().size(), 1u);
  EXPECT_DOUBLE_EQ(s.queue().front().arrival, 2.0);
  EXPECT_DOUBLE_EQ(s.queue().front().deadline, 2.08);
}

TEST(StepTraffic, BestEffortHasNoArrivals) {
  TrafficParams params;
  Rng rng(1);
  TrafficSession s(ServiceClass::BestEffort, params, nullptr, rng);
  EXPECT_EQ(step_traffic(s, 1.0, 0.0, rng), 0);
  const auto d = serve_queue(s, 5000, 0.0);
  EXPECT_EQ(d.served_bits, 5000);
  EXPECT_EQ(d.offered_bits, 5000);
  EXPECT_EQ(d.dropped_bits, 0);
}

TEST(StepTraffic, RejectsNonPositiveDt) {
  TrafficParams params;
  Rng rng(1);
  TrafficSession s(ServiceClass::VoIP, params, nullptr, rng);
  EXPECT_THROW(step_traffic(s, 0.0, 0.0, rng), Error);
}

TEST(StepTraffic, VideoNeedsRateDistribution) {
  TrafficParams params;
  Rng rng(1);
  EXPECT_THROW(TrafficSession(ServiceClass::Video, params, nullptr, rng), Error);
}

TEST(StepTraffic, VoipDutyCycleAndOnDuration) {
  TrafficParams params;
  Rng rng(12);
  TrafficSession s(ServiceClass::VoIP, params, nullptr, rng);
  const double dt = 0.01;
  for (int i = 0; i < 1000000; ++i) step_traffic(s, dt, i * dt, rng);
  const auto& log = s.phase_log();
  EXPECT_NEAR(log.on_time / (log.on_time + log.off_time), 0.4, 0.02);
  ASSERT_GT(log.on_periods, 1000);
  const double on_mean = log.completed_on_time / static_cast<double>(log.on_periods);
  EXPECT_NEAR(on_mean, 1.0, 3.0 / std::sqrt(static_cast<double>(log.on_periods)));
  const double off_mean = log.completed_off_time / static_cast<double>(log.off_periods);
  EXPECT_NEAR(off_mean, 1.5, 3.0 * 1.5 / std::sqrt(static_cast<double>(log.off_periods)));
}

TEST(StepTraffic, VideoStateDurationAndRate) {
  TrafficParams params;
  const TruncatedExponential rates(64.0, 256.0, 180.0);
  Rng rng(13);
  TrafficSession s(ServiceClass::Video, params, &rates, rng);
  const double dt = 0.01;
  std::int64_t bits = 0;
  for (int i = 0; i < 1000000; ++i) {
    bits += step_traffic(s, dt, i * dt, rng);
    ASSERT_GE(s.state_rate_kbps(), 64.0);
    ASSERT_LE(s.state_rate_kbps(), 256.0);
  }
  const auto& log = s.phase_log();
  const double mean_ms = 1000.0 * log.completed_on_time / static_cast<double>(log.on_periods);
  EXPECT_NEAR(mean_ms, 160.0, 2.0);
  // Long-run offered load is the mean state rate.
  EXPECT_NEAR(static_cast<double>(bits) / 1e4 / 1000.0, 180.0, 3.0);
}

TEST(StepTraffic, SeedDeterminism) {
  TrafficParams params;
  const TruncatedExponential rates(64.0, 256.0, 180.0);
  auto run = [&] {
    Rng rng(77);
    TrafficSession v(ServiceClass::VoIP, params, nullptr, rng);
    TrafficSession w(ServiceClass::Video, params, &rates, rng);
    std::vector<std::int64_t> out;
    for (int i = 0; i < 5000; ++i) {
      out.push_back(step_traffic(v, 0.001, i * 0.001, rng));
      out.push_back(step_traffic(w, 0.001, i * 0.001, rng));
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(ServeQueue, Examples) {
  TrafficParams params;
  Rng rng(1);
  auto empty = voip_in_phase(params, false, 1.0);
  auto d = serve_queue(empty, 1000, 0.0);
  EXPECT_EQ(d.served_bits, 0);
  EXPECT_EQ(d.dropped_bits, 0);
  EXPECT_THROW(serve_queue(empty, -1, 0.0), Error);

  // One 1000-bit packet: 32 kbps for 1/32 s.
  auto s = voip_in_phase(params, true, 0.1);
  ASSERT_EQ(step_traffic(s, 1.0 / 32.0, 0.0, rng), 1000);
  d = serve_queue(s, 1000, 0.01);
  EXPECT_EQ(d.served_bits, 1000);
  EXPECT_EQ(d.dropped_bits, 0);
  EXPECT_NEAR(d.mean_queue_delay(), 0.01, 1e-15);

  // Past its 80 ms deadline the packet is dropped whatever the capacity.
  auto late = voip_in_phase(params, true, 0.1);
  ASSERT_EQ(step_traffic(late, 1.0 / 32.0, 0.0, rng), 1000);
  d = serve_queue(late, 1000000, 0.081);
  EXPECT_EQ(d.dropped_bits, 1000);
  EXPECT_EQ(d.served_bits, 0);
  EXPECT_TRUE(late.queue().empty());
}

TEST(ServeQueue, ConservesBitsAndNeverServesExpired) {
  TrafficParams params;
  const TruncatedExponential rates(64.0, 256.0, 180.0);
  Rng rng(5);
  for (auto cls : {ServiceClass::VoIP, ServiceClass::Video}) {
    TrafficSession s(cls, params, &rates, rng);
    const double dt = 0.000125;
    for (int i = 0; i < 200000; ++i) {
      const double now = i * dt;
      const std::int64_t before = s.queued_bits();
      const std::int64_t arrived = step_traffic(s, dt, now, rng);
      // Capacity alternates between starving and generous service.
      const std::int64_t cap = (i / 4000) % 2 == 0 ? 0 : static_cast<std::int64_t>(rng.uniform() * 60);
      const auto d = serve_queue(s, cap, now);
      ASSERT_EQ(arrived, d.served_bits + d.dropped_bits + (s.queued_bits() - before));
      ASSERT_LE(d.served_bits, cap);
      for (const auto& p : s.queue()) ASSERT_GE(p.deadline, now);
      std::int64_t queued = 0;
      for (const auto& p : s.queue()) queued += p.bits;
      ASSERT_EQ(queued, s.queued_bits());
    }
  }
}
