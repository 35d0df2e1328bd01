#include "numax/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <fstream>
#include <functional>
#include <sstream>
#include <utility>

#include "numax/error.hpp"

namespace numax {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(Errc::ConfigError, key + ": expected a number, got '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used == v.size() && n >= std::numeric_limits<int>::min() && n <= std::numeric_limits<int>::max())
      return static_cast<int>(n);
  } catch (const std::exception&) {
  }
  throw Error(Errc::ConfigError, key + ": expected an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(Errc::ConfigError, key + ": expected true or false, got '" + v + "'");
}

using Setter = std::function<void(ScenarioConfig&, const std::string& key, const std::string& value)>;

template <typename T>
Setter number(T ScenarioConfig::*field) {
  return [field](ScenarioConfig& c, const std::string& k, const std::string& v) {
    if constexpr (std::is_same_v<T, int>)
      c.*field = to_int(k, v);
    else
      c.*field = to_double(k, v);
  };
}

Setter traffic_number(double TrafficParams::*field) {
  return [field](ScenarioConfig& c, const std::string& k, const std::string& v) { c.traffic.*field = to_double(k, v); };
}

Setter flag(bool ScenarioConfig::*field) {
  return [field](ScenarioConfig& c, const std::string& k, const std::string& v) { c.*field = to_bool(k, v); };
}

void add_class_keys(std::vector<std::pair<std::string, Setter>>& table, ServiceClass cls) {
  const std::size_t i = class_index(cls);
  const std::string prefix = "utility." + std::string(to_string(cls)) + ".";
  table.emplace_back(prefix + "kind", [i](ScenarioConfig& c, const std::string& k, const std::string& v) {
    utility_spec_from(v, {});  // validates the name only
    (void)k;
    c.utility[i].kind = v;
  });
  table.emplace_back(prefix + "params", [i](ScenarioConfig& c, const std::string& k, const std::string& v) {
    try {
      c.utility[i].params = parse_number_list(v);
    } catch (const Error&) {
      throw Error(Errc::ConfigError, k + ": expected a comma-separated number list");
    }
  });
  table.emplace_back(prefix + "normalize_to", [i](ScenarioConfig& c, const std::string& k, const std::string& v) {
    if (v == "auto")
      c.utility[i].normalize_to_kbps.reset();
    else if (v == "none")
      c.utility[i].normalize_to_kbps = -1.0;
    else
      c.utility[i].normalize_to_kbps = to_double(k, v);
  });
  table.emplace_back(prefix + "unit_kbps", [i](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.utility[i].unit_kbps = to_double(k, v);
  });
}

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const auto table = [] {
    std::vector<std::pair<std::string, Setter>> t;
    t.emplace_back("channel.bandwidth_hz", number(&ScenarioConfig::bandwidth_hz));
    t.emplace_back("channel.subcarriers", number(&ScenarioConfig::subcarriers));
    t.emplace_back("channel.cell_radius_m", number(&ScenarioConfig::cell_radius_m));
    t.emplace_back("channel.tx_power_dbm", number(&ScenarioConfig::tx_power_dbm));
    t.emplace_back("channel.noise_dbm", number(&ScenarioConfig::noise_dbm));
    t.emplace_back("channel.ber_target", number(&ScenarioConfig::ber_target));
    t.emplace_back("channel.shadow_sigma_db", number(&ScenarioConfig::shadow_sigma_db));
    t.emplace_back("channel.speed_mean_mps", number(&ScenarioConfig::speed_mean_mps));
    t.emplace_back("channel.speed_std_mps", number(&ScenarioConfig::speed_std_mps));
    t.emplace_back("channel.gamma_divides", flag(&ScenarioConfig::gamma_divides));
    t.emplace_back("channel.carrier_hz", number(&ScenarioConfig::carrier_hz));
    t.emplace_back("channel.fading_taps", number(&ScenarioConfig::fading_taps));
    t.emplace_back("channel.shadow_decorrelation_m", number(&ScenarioConfig::shadow_decorrelation_m));
    t.emplace_back("channel.fading_ar", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
      if (v == "auto")
        c.fading_ar.reset();
      else
        c.fading_ar = to_double(k, v);
    });
    t.emplace_back("channel.shadow_frozen", flag(&ScenarioConfig::shadow_frozen));
    t.emplace_back("channel.update_period_s", number(&ScenarioConfig::channel_update_s));

    t.emplace_back("traffic.voip.on_mean_s", traffic_number(&TrafficParams::voip_on_mean_s));
    t.emplace_back("traffic.voip.off_mean_s", traffic_number(&TrafficParams::voip_off_mean_s));
    t.emplace_back("traffic.voip.rate_kbps", traffic_number(&TrafficParams::voip_rate_kbps));
    t.emplace_back("traffic.voip.deadline_ms", traffic_number(&TrafficParams::voip_deadline_ms));
    t.emplace_back("traffic.video.state_mean_ms", traffic_number(&TrafficParams::video_state_mean_ms));
    t.emplace_back("traffic.video.rate_min_kbps", traffic_number(&TrafficParams::video_rate_min_kbps));
    t.emplace_back("traffic.video.rate_max_kbps", traffic_number(&TrafficParams::video_rate_max_kbps));
    t.emplace_back("traffic.video.rate_mean_kbps", traffic_number(&TrafficParams::video_rate_mean_kbps));
    t.emplace_back("traffic.video.deadline_s", traffic_number(&TrafficParams::video_deadline_s));
    for (auto cls : kServiceClasses) {
      const std::size_t i = class_index(cls);
      t.emplace_back("traffic." + std::string(to_string(cls)) + ".users",
                     [i](ScenarioConfig& c, const std::string& k, const std::string& v) { c.users[i] = to_int(k, v); });
    }

    for (auto cls : kServiceClasses) add_class_keys(t, cls);

    t.emplace_back("scheduler.mode", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
      if (v == "best_channel")
        c.scheduler = SchedulerMode::BestChannel;
      else if (v == "utility_greedy")
        c.scheduler = SchedulerMode::UtilityGreedy;
      else
        throw Error(Errc::ConfigError, k + ": expected best_channel or utility_greedy");
    });
    t.emplace_back("report.metric", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
      if (v == "utility")
        c.metric = ReportMetric::Utility;
      else if (v == "objective")
        c.metric = ReportMetric::Objective;
      else
        throw Error(Errc::ConfigError, k + ": expected utility or objective");
    });
    t.emplace_back("link.quantize_mcs", flag(&ScenarioConfig::quantize_mcs));

    t.emplace_back("alloc.tol", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
      c.alloc.tol = to_double(k, v);
    });
    t.emplace_back("alloc.max_outer", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
      c.alloc.max_outer = to_int(k, v);
    });
    t.emplace_back("alloc.max_inner", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
      c.alloc.max_inner = to_int(k, v);
    });

    t.emplace_back("sim.frame_s", number(&ScenarioConfig::frame_s));
    t.emplace_back("sim.duration_s", number(&ScenarioConfig::duration_s));
    t.emplace_back("sim.report_window_s", number(&ScenarioConfig::report_window_s));
    t.emplace_back("sim.seed", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
      const int s = to_int(k, v);
      if (s < 0) throw Error(Errc::ConfigError, k + ": seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    });
    return t;
  }();
  return table;
}

}  // namespace

ScenarioConfig::ScenarioConfig() {
  users = {10, 4, 20};
  auto& voip = utility[class_index(ServiceClass::VoIP)];
  voip = {"sigmoid", {4.0}, 64.0, 8.0};
  auto& video = utility[class_index(ServiceClass::Video)];
  video = {"sigmoid", {4.0}, 512.0, 45.0};
  auto& be = utility[class_index(ServiceClass::BestEffort)];
  be = {"pf", {1.0, 1.0, 1.0}, std::nullopt, 1.0};
}

ChannelParams ScenarioConfig::channel_params() const {
  ChannelParams p;
  p.link = LinkBudget::make(bandwidth_hz, subcarriers, tx_power_dbm, noise_dbm, ber_target);
  p.cell_radius_m = cell_radius_m;
  p.shadow_sigma_db = shadow_sigma_db;
  p.shadow_decorrelation_m = shadow_decorrelation_m;
  p.speed_mean_mps = speed_mean_mps;
  p.speed_std_mps = speed_std_mps;
  p.carrier_hz = carrier_hz;
  p.n_taps = fading_taps;
  p.gamma_divides = gamma_divides;
  p.fading_ar = fading_ar;
  p.shadow_frozen = shadow_frozen;
  return p;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::ConfigError, what); };
  for (int n : users)
    if (n < 0) fail("user counts must be >= 0");
  if (!(frame_s > 0.0)) fail("sim.frame_s must be positive");
  if (!(duration_s >= 0.0)) fail("sim.duration_s must be >= 0");
  if (!(report_window_s >= frame_s)) fail("sim.report_window_s must be at least one frame");
  if (!(channel_update_s > 0.0)) fail("channel.update_period_s must be positive");
  if (subcarriers < 1) fail("channel.subcarriers must be >= 1");
  if (!(bandwidth_hz > 0.0)) fail("channel.bandwidth_hz must be positive");
  if (!(ber_target > 0.0 && ber_target <= 0.2)) fail("channel.ber_target must lie in (0, 0.2]");
  if (speed_mean_mps < 0.0 || speed_std_mps < 0.0) fail("speeds must be >= 0");
  if (shadow_sigma_db < 0.0) fail("channel.shadow_sigma_db must be >= 0");
  if (!(shadow_decorrelation_m > 0.0)) fail("channel.shadow_decorrelation_m must be positive");
  if (fading_taps < 1) fail("channel.fading_taps must be >= 1");
  for (const auto& u : utility) {
    if (!(u.unit_kbps > 0.0)) fail("utility unit_kbps must be positive");
    if (u.normalize_to_kbps && *u.normalize_to_kbps == 0.0) fail("utility normalize_to must be non-zero");
  }
}

void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [name, set] : setters()) {
    if (name == key) {
      set(cfg, key, value);
      return;
    }
  }
  throw Error(Errc::ConfigError, "unknown key '" + key + "'");
}

const std::vector<std::string>& config_keys() {
  static const auto keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, set] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::ConfigError, "line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_setting(cfg, key, value);
    } catch (const Error& e) {
      throw Error(Errc::ConfigError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open config file '" + path + "'");
  return parse_config(in);
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  if (!trim(text).empty() && trim(text).back() == ',')
    throw Error(Errc::ConfigError, "empty entry in number list '" + text + "'");
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw Error(Errc::ConfigError, "empty entry in number list '" + text + "'");
    out.push_back(to_double("list", item));
  }
  return out;
}

UtilitySpec utility_spec_from(const std::string& kind, const std::vector<double>& p) {
  auto at = [&](std::size_t i, double fallback) { return i < p.size() ? p[i] : fallback; };
  auto max_params = [&](std::size_t n) {
    if (p.size() > n) throw Error(Errc::ConfigError, kind + " takes at most " + std::to_string(n) + " parameters");
  };
  if (kind == "linear") {
    max_params(3);
    return LinearSpec{at(0, 1.0), at(1, 0.0), at(2, 0.0)};
  }
  if (kind == "power") {
    max_params(4);
    const double k = at(1, 0.0);
    if (k != std::floor(k)) throw Error(Errc::ConfigError, "power exponent must be an integer");
    return PowerSpec{at(0, 1.0), static_cast<int>(k), at(2, 0.0), at(3, 0.0)};
  }
  if (kind == "polynomial") return PolynomialSpec{p.empty() ? std::vector<double>{1.0} : p, 0.0, 0.0};
  if (kind == "exponential") {
    max_params(3);
    return ExponentialSpec{at(0, 0.0), at(1, 0.0), at(2, 0.0), false};
  }
  if (kind == "exponential_unit") {
    max_params(2);
    return ExponentialSpec{1.0, at(0, 0.0), at(1, 0.0), true};
  }
  if (kind == "pf") {
    max_params(5);
    return ProportionalFairnessSpec{at(0, 1.0), at(1, 1.0), at(2, 1.0), at(3, 0.0), at(4, 0.0)};
  }
  if (kind == "sigmoid") {
    max_params(3);
    return SigmoidSpec{at(0, 0.0), at(1, 0.0), at(2, 0.0)};
  }
  throw Error(Errc::ConfigError,
              "unknown utility kind '" + kind + "' (linear, power, polynomial, exponential, exponential_unit, pf, sigmoid)");
}

}  // namespace numax
