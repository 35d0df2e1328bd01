#pragma once

#include <cstdint>
#include <deque>
#include <string_view>

#include "numax/rng.hpp"

namespace numax {

enum class ServiceClass { VoIP, Video, BestEffort };

std::string_view to_string(ServiceClass c) noexcept;

struct TrafficParams {
  double voip_on_mean_s = 1.0;
  double voip_off_mean_s = 1.5;
  double voip_rate_kbps = 32.0;
  double voip_deadline_ms = 80.0;
  double video_state_mean_ms = 160.0;
  double video_rate_min_kbps = 64.0;
  double video_rate_max_kbps = 256.0;
  double video_rate_mean_kbps = 180.0;
  double video_deadline_s = 1.0;
};

/// Density proportional to exp(-lambda x) on [lo, hi], with lambda chosen
/// so that the mean equals the requested value.
class TruncatedExponential {
 public:
  /// Throws SolverFailure when the mean cannot be reached (it must lie
  /// strictly inside (lo, hi)).
  TruncatedExponential(double lo, double hi, double mean);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double lambda() const noexcept { return lambda_; }

  double sample(Rng& rng) const noexcept;

  /// Mean of the truncated density for a given lambda (lambda = 0 is the
  /// uniform limit).
  static double mean_for(double lambda, double lo, double hi) noexcept;

 private:
  double lo_;
  double hi_;
  double lambda_ = 0.0;
};

/// One draw of a video state rate in kbps.
double sample_truncated_exp_rate(const TruncatedExponential& dist, Rng& rng) noexcept;

struct Packet {
  std::int64_t bits = 0;
  double arrival = 0.0;
  double deadline = 0.0;
};

struct ServiceStats {
  std::int64_t offered_bits = 0;
  std::int64_t served_bits = 0;
  std::int64_t dropped_bits = 0;
  double delay_bit_seconds = 0.0;  ///< sum over served bits of their queueing delay

  double mean_queue_delay() const noexcept {
    return served_bits > 0 ? delay_bit_seconds / static_cast<double>(served_bits) : 0.0;
  }

  ServiceStats& operator+=(const ServiceStats& o) noexcept {
    offered_bits += o.offered_bits;
    served_bits += o.served_bits;
    dropped_bits += o.dropped_bits;
    delay_bit_seconds += o.delay_bit_seconds;
    return *this;
  }
};

/// Time spent in each generator phase, for checking the traffic models.
struct PhaseLog {
  double on_time = 0.0;   ///< VoIP ON time; video: time in completed states
  double off_time = 0.0;
  std::int64_t on_periods = 0;  ///< completed ON periods (video: states)
  std::int64_t off_periods = 0;
  double completed_on_time = 0.0;
  double completed_off_time = 0.0;
};

/// Per-user traffic source with its deadline-aware FIFO. Best-effort
/// sessions are full-buffer: they never queue and absorb any capacity.
class TrafficSession {
 public:
  /// Starts in the generator's stationary regime. `video_rates` must
  /// outlive the session for video sessions.
  TrafficSession(ServiceClass cls, const TrafficParams& params, const TruncatedExponential* video_rates, Rng& rng);

  ServiceClass service_class() const noexcept { return cls_; }
  bool on() const noexcept { return on_; }
  double residual() const noexcept { return residual_; }
  double state_rate_kbps() const noexcept { return rate_kbps_; }
  const std::deque<Packet>& queue() const noexcept { return queue_; }
  std::int64_t queued_bits() const noexcept { return queued_bits_; }
  const PhaseLog& phase_log() const noexcept { return log_; }

 private:
  friend std::int64_t step_traffic(TrafficSession& s, double dt, double now, Rng& rng);
  friend ServiceStats serve_queue(TrafficSession& s, std::int64_t capacity_bits, double now);

  void next_phase(Rng& rng);

  ServiceClass cls_;
  const TrafficParams* params_;
  const TruncatedExponential* video_rates_;
  bool on_ = false;
  double residual_ = 0.0;
  double rate_kbps_ = 0.0;
  double phase_elapsed_ = 0.0;
  double fluid_ = 0.0;  // generated but not yet packetized (< 1 bit)
  std::deque<Packet> queue_;
  std::int64_t queued_bits_ = 0;
  PhaseLog log_;
};

/// Generates the bits arriving during (now, now + dt] and enqueues them as
/// one packet stamped at `now`. Returns the number of bits that arrived
/// (always 0 for best effort).
std::int64_t step_traffic(TrafficSession& s, double dt, double now, Rng& rng);

/// Drops packets whose deadline is before `now`, then serves FIFO up to
/// `capacity_bits`.
ServiceStats serve_queue(TrafficSession& s, std::int64_t capacity_bits, double now);

}  // namespace numax
