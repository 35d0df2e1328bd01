#include "numax/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "numax/channel.hpp"
#include "numax/error.hpp"
#include "numax/power_alloc.hpp"
#include "numax/scheduler.hpp"
#include "numax/traffic.hpp"

namespace numax {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kMaxBitsPerSymbol = 5.25;  // 64QAM at rate 7/8
constexpr double kPowerSlack = 1e-9;

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct UserWindow {
  std::int64_t capacity_bits = 0;
  std::int64_t arrived_bits = 0;
  std::int64_t dropped_bits = 0;
  double objective_sum = 0.0;
};

}  // namespace

std::array<ClassUtility, 3> build_class_utilities(const ScenarioConfig& cfg) {
  const LinkBudget link =
      LinkBudget::make(cfg.bandwidth_hz, cfg.subcarriers, cfg.tx_power_dbm, cfg.noise_dbm, cfg.ber_target);
  const double cell_kbps = link.delta_f_hz * kMaxBitsPerSymbol * link.n_subcarriers / 1000.0;
  const double subcarrier_kbps_per_nat = link.delta_f_hz / (1000.0 * kLn2);

  std::array<ClassUtility, 3> out;
  for (auto cls : kServiceClasses) {
    const auto& uc = cfg.utility[class_index(cls)];
    const std::string name(to_string(cls));
    UtilityModel base = make_utility(utility_spec_from(uc.kind, uc.params));
    UtilityModel report = with_rate_scale(base, 1.0 / uc.unit_kbps);
    double m = 0.0;
    if (!uc.normalize_to_kbps)
      m = cell_kbps;
    else if (*uc.normalize_to_kbps > 0.0)
      m = *uc.normalize_to_kbps;
    if (m > 0.0) report = normalize(report, m);
    UtilityModel optimizer = with_rate_scale(report, subcarrier_kbps_per_nat);
    const auto check = criterion_check(optimizer);
    if (!check.passed)
      throw Error(Errc::NonCompliantUtility, "utility of class " + name + " violates the criterion at x = " +
                                                 fmt9(check.worst_x) + " once scaled to subcarrier rates");
    out[class_index(cls)] = ClassUtility{std::move(report), std::move(optimizer), m};
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  ScenarioResult result;

  const auto utilities = build_class_utilities(cfg);
  std::vector<ServiceClass> user_class;
  for (auto cls : kServiceClasses)
    for (int j = 0; j < cfg.users[class_index(cls)]; ++j) user_class.push_back(cls);
  const std::size_t n_users = user_class.size();

  const auto n_frames = static_cast<std::int64_t>(std::llround(cfg.duration_s / cfg.frame_s));
  const auto frames_per_window = std::max<std::int64_t>(1, std::llround(cfg.report_window_s / cfg.frame_s));
  const auto frames_per_update = std::max<std::int64_t>(1, std::llround(cfg.channel_update_s / cfg.frame_s));

  if (n_users == 0) {
    // Nothing to schedule; windows still elapse so the run completes.
    for (std::int64_t f = 0, w = 0; f < n_frames; f += frames_per_window, ++w)
      result.records.push_back({static_cast<std::size_t>(w), {}});
    result.audit.frames = n_frames;
    return result;
  }

  const ChannelModel channel(cfg.channel_params());
  const LinkBudget& link = channel.params().link;
  const double budget = link.tx_power_w();
  const auto k_count = static_cast<std::size_t>(link.n_subcarriers);

  Rng channel_rng(cfg.seed, 1);
  Rng traffic_rng(cfg.seed, 2);

  auto mobility = channel.spawn_users(n_users, channel_rng);
  ChannelState state = channel.initial_state(mobility, channel_rng);

  const TrafficParams& tp = cfg.traffic;
  std::optional<TruncatedExponential> video_rates;
  if (cfg.users[class_index(ServiceClass::Video)] > 0)
    video_rates.emplace(tp.video_rate_min_kbps, tp.video_rate_max_kbps, tp.video_rate_mean_kbps);
  std::vector<TrafficSession> sessions;
  sessions.reserve(n_users);
  for (auto cls : user_class) sessions.emplace_back(cls, tp, video_rates ? &*video_rates : nullptr, traffic_rng);

  std::vector<double> capacity_bps(n_users, 0.0);
  std::vector<double> objective_per_frame(n_users, 0.0);
  std::vector<double> carry(n_users, 0.0);
  std::vector<UserWindow> window(n_users);
  std::vector<const UtilityModel*> greedy_utils(n_users);
  for (std::size_t i = 0; i < n_users; ++i) greedy_utils[i] = &utilities[class_index(user_class[i])].optimizer;

  AllocationProblem problem;
  problem.budget = budget;
  AllocationOptions options = cfg.alloc;
  problem.beta.resize(k_count);

  auto reschedule = [&](std::int64_t frame) {
    Partition part = cfg.scheduler == SchedulerMode::BestChannel
                         ? assign_best_channel(state.beta)
                         : assign_utility_aware(state.beta, greedy_utils, budget);
    part.validate(n_users);
    ++result.audit.partition_checks;

    problem.utility.clear();
    for (std::size_t k = 0; k < k_count; ++k) {
      const std::size_t i = part.owner[k];
      problem.beta[k] = state.beta(i, k);
      problem.utility.emplace_back(*greedy_utils[i]);
    }
    AllocationResult alloc;
    try {
      alloc = kkt_allocate(problem, options);
    } catch (const Error& e) {
      throw Error(e.code(), "frame " + std::to_string(frame) + ": " + e.what());
    }
    if (alloc.nu > 0.0) options.nu_hint = alloc.nu;
    double total = 0.0;
    for (double p : alloc.powers) total += p;
    const double excess = total - budget;
    result.audit.max_power_excess = std::max(result.audit.max_power_excess, excess);
    ++result.audit.allocations;
    if (!alloc.converged) ++result.audit.unconverged;
    if (excess > kPowerSlack)
      throw Error(Errc::InvariantViolation,
                  "frame " + std::to_string(frame) + ": allocated power exceeds the budget by " + fmt9(excess));

    std::fill(capacity_bps.begin(), capacity_bps.end(), 0.0);
    std::fill(objective_per_frame.begin(), objective_per_frame.end(), 0.0);
    for (std::size_t k = 0; k < k_count; ++k) {
      const std::size_t i = part.owner[k];
      const double r = rate_nats(problem.beta[k], alloc.powers[k]);
      capacity_bps[i] += cfg.quantize_mcs ? quantize_mcs(r / kLn2).bits_per_symbol * link.delta_f_hz
                                          : rate_bps(r, link.delta_f_hz);
      objective_per_frame[i] += greedy_utils[i]->value(r);
    }
  };

  auto close_window = [&](std::size_t index, std::int64_t frames_in_window) {
    const double seconds = static_cast<double>(frames_in_window) * cfg.frame_s;
    MetricsRecord rec;
    rec.window_index = index;
    for (auto cls : kServiceClasses) {
      const int count = cfg.users[class_index(cls)];
      if (count == 0) continue;
      const auto& cu = utilities[class_index(cls)];
      ClassMetrics m;
      m.cls = cls;
      m.users = count;
      std::int64_t arrived = 0, dropped = 0;
      for (std::size_t i = 0; i < n_users; ++i) {
        if (user_class[i] != cls) continue;
        const double bps = static_cast<double>(window[i].capacity_bits) / seconds;
        double u = cfg.metric == ReportMetric::Utility
                       ? cu.report.value(bps / 1000.0)
                       : window[i].objective_sum / static_cast<double>(frames_in_window);
        if (!std::isfinite(u))
          throw Error(Errc::EvaluationFailure, "utility of user " + std::to_string(i) + " is not finite");
        m.avg_utility += std::clamp(u, 0.0, 1.0);
        m.avg_throughput_bps += bps;
        arrived += window[i].arrived_bits;
        dropped += window[i].dropped_bits;
      }
      m.avg_utility /= count;
      m.avg_throughput_bps /= count;
      m.drop_rate = arrived > 0 ? static_cast<double>(dropped) / static_cast<double>(arrived) : 0.0;
      rec.classes.push_back(m);
    }
    result.records.push_back(std::move(rec));
    std::fill(window.begin(), window.end(), UserWindow{});
  };

  std::size_t window_index = 0;
  std::int64_t frames_in_window = 0;
  for (std::int64_t f = 0; f < n_frames; ++f) {
    const double now = static_cast<double>(f) * cfg.frame_s;

    for (std::size_t i = 0; i < n_users; ++i) window[i].arrived_bits += step_traffic(sessions[i], cfg.frame_s, now, traffic_rng);

    if (f % frames_per_update == 0) {
      if (f > 0)
        state = step_channel(channel, std::move(state), mobility,
                             static_cast<double>(frames_per_update) * cfg.frame_s, channel_rng);
      reschedule(f);
    }

    for (std::size_t i = 0; i < n_users; ++i) {
      carry[i] += capacity_bps[i] * cfg.frame_s;
      const double whole = std::floor(carry[i]);
      carry[i] -= whole;
      const auto cap = static_cast<std::int64_t>(whole);
      const ServiceStats d = serve_queue(sessions[i], cap, now);
      if (d.served_bits > cap)
        throw Error(Errc::InvariantViolation, "frame " + std::to_string(f) + ": user " + std::to_string(i) +
                                                  " served more bits than its capacity");
      ++result.audit.capacity_checks;
      window[i].capacity_bits += cap;
      window[i].dropped_bits += d.dropped_bits;
      window[i].objective_sum += objective_per_frame[i];
    }

    ++result.audit.frames;
    if (++frames_in_window == frames_per_window) {
      close_window(window_index++, frames_in_window);
      frames_in_window = 0;
    }
  }
  if (frames_in_window > 0) close_window(window_index, frames_in_window);
  return result;
}

UtilitySummary average_utility(const std::vector<MetricsRecord>& records, ServiceClass cls) {
  std::vector<double> xs;
  for (const auto& r : records)
    for (const auto& c : r.classes)
      if (c.cls == cls) xs.push_back(c.avg_utility);
  if (xs.empty()) throw Error(Errc::EmptyInput, "no windows report class " + std::string(to_string(cls)));
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

bool is_sweepable(const std::string& key) {
  for (auto cls : kServiceClasses)
    if (key == "traffic." + std::string(to_string(cls)) + ".users") return true;
  return false;
}

SweepResult sweep(const ScenarioConfig& cfg, const std::string& param, const std::vector<int>& values, int seeds,
                  unsigned jobs) {
  if (!is_sweepable(param)) throw Error(Errc::ConfigError, "'" + param + "' is not a sweepable user-count key");
  if (seeds < 1) throw Error(Errc::InvalidParams, "need at least one seed");

  const std::size_t n_runs = values.size() * static_cast<std::size_t>(seeds);
  std::vector<ScenarioResult> runs(n_runs);
  std::vector<ScenarioConfig> configs;
  configs.reserve(n_runs);
  for (int v : values) {
    for (int s = 0; s < seeds; ++s) {
      ScenarioConfig c = cfg;
      apply_setting(c, param, std::to_string(v));
      c.seed = cfg.seed + static_cast<std::uint64_t>(s);
      c.validate();
      configs.push_back(std::move(c));
    }
  }

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n_runs, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < n_runs;) {
      try {
        runs[j] = run_scenario(configs[j]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_runs;
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult out;
  for (const auto& r : runs) {
    auto& a = out.audit;
    a.frames += r.audit.frames;
    a.allocations += r.audit.allocations;
    a.max_power_excess = std::max(a.max_power_excess, r.audit.max_power_excess);
    a.partition_checks += r.audit.partition_checks;
    a.capacity_checks += r.audit.capacity_checks;
    a.unconverged += r.audit.unconverged;
  }
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    std::vector<MetricsRecord> pooled;
    for (int s = 0; s < seeds; ++s) {
      const auto& recs = runs[vi * static_cast<std::size_t>(seeds) + static_cast<std::size_t>(s)].records;
      pooled.insert(pooled.end(), recs.begin(), recs.end());
    }
    for (auto cls : kServiceClasses) {
      double thr = 0.0, drop = 0.0;
      int n = 0;
      for (const auto& r : pooled)
        for (const auto& c : r.classes)
          if (c.cls == cls) {
            thr += c.avg_throughput_bps;
            drop += c.drop_rate;
            ++n;
          }
      if (n == 0) continue;
      const auto summary = average_utility(pooled, cls);
      out.rows.push_back({static_cast<double>(values[vi]), cls, summary.mean, summary.ci95, thr / n, drop / n});
    }
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
  out << "window,class,avg_utility,avg_throughput_bps,drop_rate\n";
  for (const auto& r : records)
    for (const auto& c : r.classes)
      out << r.window_index << ',' << to_string(c.cls) << ',' << fmt9(c.avg_utility) << ','
          << fmt9(c.avg_throughput_bps) << ',' << fmt9(c.drop_rate) << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "param_value,class,mean_utility,ci95,mean_throughput_bps,drop_rate\n";
  for (const auto& r : rows)
    out << fmt9(r.param_value) << ',' << to_string(r.cls) << ',' << fmt9(r.mean_utility) << ',' << fmt9(r.ci95)
        << ',' << fmt9(r.mean_throughput_bps) << ',' << fmt9(r.drop_rate) << '\n';
}

}  // namespace numax
