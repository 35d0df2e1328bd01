#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "numax/channel.hpp"
#include "numax/power_alloc.hpp"
#include "numax/traffic.hpp"
#include "numax/utility.hpp"

namespace numax {

enum class SchedulerMode { BestChannel, UtilityGreedy };
enum class ReportMetric { Utility, Objective };

inline constexpr std::array<ServiceClass, 3> kServiceClasses{ServiceClass::VoIP, ServiceClass::Video,
                                                             ServiceClass::BestEffort};

inline std::size_t class_index(ServiceClass c) noexcept { return static_cast<std::size_t>(c); }

/// How one service class values rate. The family works on x = rate_kbps /
/// unit_kbps; `params` are family parameters in that unit.
struct ClassUtilityConfig {
  std::string kind = "sigmoid";
  std::vector<double> params{4.0};
  /// Rate (kbps) mapped to utility 1; nullopt = automatic (cell capacity),
  /// a negative value disables normalization.
  std::optional<double> normalize_to_kbps;
  double unit_kbps = 1.0;
};

struct ScenarioConfig {
  // channel.*
  double bandwidth_hz = 1.024e6;
  int subcarriers = 256;
  double cell_radius_m = 1000.0;
  double tx_power_dbm = 43.0;
  double noise_dbm = -108.0;
  double ber_target = 1e-4;
  double shadow_sigma_db = 8.0;
  double speed_mean_mps = 20.0;
  double speed_std_mps = 2.24;
  bool gamma_divides = false;
  double carrier_hz = 2e9;
  int fading_taps = 6;
  double shadow_decorrelation_m = 20.0;
  std::optional<double> fading_ar;
  bool shadow_frozen = false;
  double channel_update_s = 0.001;

  TrafficParams traffic;
  std::array<int, 3> users{0, 0, 0};  ///< indexed by class_index
  std::array<ClassUtilityConfig, 3> utility;

  SchedulerMode scheduler = SchedulerMode::BestChannel;
  ReportMetric metric = ReportMetric::Utility;
  bool quantize_mcs = true;
  AllocationOptions alloc;

  double frame_s = 0.000125;
  double duration_s = 10.0;
  double report_window_s = 0.5;
  std::uint64_t seed = 1;

  ScenarioConfig();

  ChannelParams channel_params() const;
  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
};

/// Sets one `key = value` entry. Throws ConfigError for unknown keys or
/// malformed values.
void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value);

/// Parses line-oriented `key = value` text with `#` comments on top of the
/// defaults.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::string& path);

/// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

/// Builds the family named by `kind` from a flat parameter list.
UtilitySpec utility_spec_from(const std::string& kind, const std::vector<double>& params);

std::vector<double> parse_number_list(const std::string& text);

}  // namespace numax
