#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "numax/config.hpp"
#include "numax/utility.hpp"

namespace numax {

/// The two views of one class's utility: `report` takes window throughput in
/// kbps; `optimizer` takes one subcarrier's rate in nats/symbol.
struct ClassUtility {
  UtilityModel report;
  UtilityModel optimizer;
  double normalize_to_kbps = 0.0;  ///< 0 when normalization is disabled
};

/// Builds both views for every class. Throws NonCompliantUtility when the
/// optimizer view fails the criterion.
std::array<ClassUtility, 3> build_class_utilities(const ScenarioConfig& cfg);

struct ClassMetrics {
  ServiceClass cls = ServiceClass::BestEffort;
  int users = 0;
  double avg_utility = 0.0;         ///< in [0, 1]
  double avg_throughput_bps = 0.0;  ///< per-user mean
  double drop_rate = 0.0;           ///< dropped / arrived bits in the window
};

struct MetricsRecord {
  std::size_t window_index = 0;
  std::vector<ClassMetrics> classes;  ///< only classes with users, in class order
};

/// Continuous checks made during a run.
struct RunAudit {
  std::int64_t frames = 0;
  std::int64_t allocations = 0;
  double max_power_excess = -1e300;  ///< max over allocations of sum(p) - budget
  std::int64_t partition_checks = 0;
  std::int64_t capacity_checks = 0;
  std::int64_t unconverged = 0;
};

struct ScenarioResult {
  std::vector<MetricsRecord> records;
  RunAudit audit;
};

/// Frame-by-frame simulation. Throws InvariantViolation if a frame breaks
/// the power budget, the partition cover or the capacity bound; solver
/// errors are rethrown with the frame index.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

struct UtilitySummary {
  double mean = 0.0;
  double ci95 = 0.0;
};

/// Mean and normal-approximation 95% half-width over windows. A single
/// window gives a zero half-width. Throws EmptyInput when no record has
/// the class.
UtilitySummary average_utility(const std::vector<MetricsRecord>& records, ServiceClass cls);

struct SweepRow {
  double param_value = 0.0;
  ServiceClass cls = ServiceClass::BestEffort;
  double mean_utility = 0.0;
  double ci95 = 0.0;
  double mean_throughput_bps = 0.0;
  double drop_rate = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< ordered by (value, class)
  RunAudit audit;              ///< merged over every run
};

/// Names accepted by `sweep` as the swept parameter.
bool is_sweepable(const std::string& key);

/// Runs every (value, seed index) pair with seed = cfg.seed + seed index.
/// Windows of all seeds are pooled per (value, class). `jobs` = 0 uses the
/// hardware concurrency.
SweepResult sweep(const ScenarioConfig& cfg, const std::string& param, const std::vector<int>& values, int seeds,
                  unsigned jobs = 0);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace numax
