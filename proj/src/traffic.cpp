#include "numax/traffic.hpp"

#include <algorithm>
#include <cmath>

#include "numax/error.hpp"

namespace numax {

std::string_view to_string(ServiceClass c) noexcept {
  switch (c) {
    case ServiceClass::VoIP: return "voip";
    case ServiceClass::Video: return "video";
    case ServiceClass::BestEffort: return "be";
  }
  return "unknown";
}

double TruncatedExponential::mean_for(double lambda, double lo, double hi) noexcept {
  const double span = hi - lo;
  const double z = lambda * span;
  if (std::abs(z) < 1e-4) {
    // Series of 1/lambda - span/(e^z - 1) around z = 0.
    return lo + span * (0.5 - z / 12.0 + z * z * z / 720.0);
  }
  return lo + 1.0 / lambda - span / std::expm1(z);
}

TruncatedExponential::TruncatedExponential(double lo, double hi, double mean) : lo_(lo), hi_(hi) {
  if (!(hi > lo) || !(mean > lo && mean < hi))
    throw Error(Errc::SolverFailure, "truncated exponential needs lo < mean < hi");
  double a = -1.0, b = 1.0;  // mean_for is decreasing in lambda
  if (mean_for(a, lo, hi) < mean || mean_for(b, lo, hi) > mean)
    throw Error(Errc::SolverFailure, "requested mean is outside the reachable range for lambda in [-1, 1]");
  for (int i = 0; i < 200 && b - a > 1e-17; ++i) {
    const double mid = 0.5 * (a + b);
    if (mean_for(mid, lo, hi) > mean)
      a = mid;
    else
      b = mid;
  }
  lambda_ = 0.5 * (a + b);
  if (!(std::abs(mean_for(lambda_, lo, hi) - mean) <= 1e-9 * mean))
    throw Error(Errc::SolverFailure, "truncated exponential root find did not converge");
}

double TruncatedExponential::sample(Rng& rng) const noexcept {
  const double u = rng.uniform();
  const double span = hi_ - lo_;
  if (lambda_ == 0.0) return lo_ + u * span;
  const double x = lo_ - std::log1p(u * std::expm1(-lambda_ * span)) / lambda_;
  return std::clamp(x, lo_, hi_);
}

double sample_truncated_exp_rate(const TruncatedExponential& dist, Rng& rng) noexcept { return dist.sample(rng); }

TrafficSession::TrafficSession(ServiceClass cls, const TrafficParams& params, const TruncatedExponential* video_rates,
                               Rng& rng)
    : cls_(cls), params_(&params), video_rates_(video_rates) {
  switch (cls_) {
    case ServiceClass::VoIP: {
      const double p_on = params.voip_on_mean_s / (params.voip_on_mean_s + params.voip_off_mean_s);
      on_ = rng.uniform() < p_on;
      residual_ = rng.exponential(on_ ? params.voip_on_mean_s : params.voip_off_mean_s);
      break;
    }
    case ServiceClass::Video:
      if (video_rates_ == nullptr) throw Error(Errc::InvalidParams, "video session needs a rate distribution");
      on_ = true;
      rate_kbps_ = video_rates_->sample(rng);
      residual_ = rng.exponential(params.video_state_mean_ms / 1000.0);
      break;
    case ServiceClass::BestEffort:
      on_ = true;
      break;
  }
}

void TrafficSession::next_phase(Rng& rng) {
  if (cls_ == ServiceClass::VoIP) {
    if (on_) {
      ++log_.on_periods;
      log_.completed_on_time += phase_elapsed_;
    } else {
      ++log_.off_periods;
      log_.completed_off_time += phase_elapsed_;
    }
    on_ = !on_;
    residual_ = rng.exponential(on_ ? params_->voip_on_mean_s : params_->voip_off_mean_s);
  } else {
    ++log_.on_periods;
    log_.completed_on_time += phase_elapsed_;
    rate_kbps_ = video_rates_->sample(rng);
    residual_ = rng.exponential(params_->video_state_mean_ms / 1000.0);
  }
  phase_elapsed_ = 0.0;
}

std::int64_t step_traffic(TrafficSession& s, double dt, double now, Rng& rng) {
  if (!(dt > 0.0)) throw Error(Errc::DomainError, "traffic step needs dt > 0");
  if (s.cls_ == ServiceClass::BestEffort) return 0;

  double generated = 0.0;
  double remaining = dt;
  while (remaining > 0.0) {
    const bool completes = s.residual_ <= remaining;
    const double seg = completes ? s.residual_ : remaining;
    const double rate_bps = s.cls_ == ServiceClass::VoIP ? (s.on_ ? s.params_->voip_rate_kbps * 1000.0 : 0.0)
                                                         : s.rate_kbps_ * 1000.0;
    generated += rate_bps * seg;
    if (s.on_)
      s.log_.on_time += seg;
    else
      s.log_.off_time += seg;
    s.phase_elapsed_ += seg;
    remaining -= seg;
    if (completes) {
      s.next_phase(rng);
    } else {
      s.residual_ -= seg;
    }
  }

  s.fluid_ += generated;
  const double whole = std::floor(s.fluid_);
  s.fluid_ -= whole;
  const auto bits = static_cast<std::int64_t>(whole);
  if (bits > 0) {
    const double lifetime =
        s.cls_ == ServiceClass::VoIP ? s.params_->voip_deadline_ms / 1000.0 : s.params_->video_deadline_s;
    s.queue_.push_back({bits, now, now + lifetime});
    s.queued_bits_ += bits;
  }
  return bits;
}

ServiceStats serve_queue(TrafficSession& s, std::int64_t capacity_bits, double now) {
  if (capacity_bits < 0) throw Error(Errc::DomainError, "capacity must be non-negative");
  ServiceStats d;
  if (s.cls_ == ServiceClass::BestEffort) {
    d.offered_bits = capacity_bits;
    d.served_bits = capacity_bits;
    return d;
  }
  auto& q = s.queue_;
  // Lifetimes are constant per class, so expired packets sit at the front.
  while (!q.empty() && q.front().deadline < now) {
    d.dropped_bits += q.front().bits;
    s.queued_bits_ -= q.front().bits;
    q.pop_front();
  }
  std::int64_t left = capacity_bits;
  while (left > 0 && !q.empty()) {
    Packet& head = q.front();
    const std::int64_t take = std::min(left, head.bits);
    d.served_bits += take;
    d.delay_bit_seconds += static_cast<double>(take) * (now - head.arrival);
    head.bits -= take;
    left -= take;
    s.queued_bits_ -= take;
    if (head.bits == 0) q.pop_front();
  }
  return d;
}

}  // namespace numax
