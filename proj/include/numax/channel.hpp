#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "numax/rng.hpp"

namespace numax {

struct LinkBudget {
  double tx_power_dbm = 43.0;
  double noise_dbm_per_subcarrier = -108.0;
  double ber_target = 1e-4;
  double gamma = 0.0;  ///< SNR gap, -ln(5 BER) / 1.5
  double bandwidth_hz = 1.024e6;
  int n_subcarriers = 256;
  double delta_f_hz = 4000.0;

  static LinkBudget make(double bandwidth_hz, int n_subcarriers, double tx_power_dbm, double noise_dbm,
                         double ber_target);

  double tx_power_w() const noexcept;
  double noise_w() const noexcept;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct UserMobilityState {
  Vec2 position;
  double speed = 0.0;    ///< m/s
  double heading = 0.0;  ///< radians
  double shadowing_db = 0.0;

  double distance() const noexcept;
};

/// Dense users x subcarriers matrix of SNR coefficients (1/W).
class BetaMatrix {
 public:
  BetaMatrix() = default;
  BetaMatrix(std::size_t users, std::size_t subcarriers, double fill = 0.0)
      : users_(users), subcarriers_(subcarriers), data_(users * subcarriers, fill) {}

  std::size_t users() const noexcept { return users_; }
  std::size_t subcarriers() const noexcept { return subcarriers_; }

  double& operator()(std::size_t user, std::size_t k) noexcept { return data_[user * subcarriers_ + k]; }
  double operator()(std::size_t user, std::size_t k) const noexcept { return data_[user * subcarriers_ + k]; }

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const BetaMatrix&, const BetaMatrix&) = default;

 private:
  std::size_t users_ = 0;
  std::size_t subcarriers_ = 0;
  std::vector<double> data_;
};

struct ChannelState {
  BetaMatrix beta;
  std::vector<std::vector<std::complex<double>>> taps;  ///< per user multipath taps
  std::size_t frame_index = 0;
};

struct ChannelParams {
  LinkBudget link = LinkBudget::make(1.024e6, 256, 43.0, -108.0, 1e-4);
  double cell_radius_m = 1000.0;
  double shadow_sigma_db = 8.0;
  double shadow_decorrelation_m = 20.0;
  double speed_mean_mps = 20.0;
  double speed_std_mps = 2.24;
  double carrier_hz = 2e9;
  int n_taps = 6;
  double tap_decay = 1.5;  ///< exponential power-delay profile decay, in taps
  /// Divide the SNR by the gap instead of multiplying by it.
  bool gamma_divides = false;
  /// Fixed AR(1) coefficient for the taps; derived from speed when unset.
  std::optional<double> fading_ar;
  bool shadow_frozen = false;
};

/// 38.4 + 20 log10(d). Throws DomainError for d < 1 m.
double path_loss_db(double d_m);

/// -ln(5 ber) / 1.5, for 0 < ber <= 0.2. Throws DomainError otherwise.
double gamma_from_ber(double ber);

inline double rate_nats(double beta, double p) noexcept { return std::log1p(beta * p); }

inline double rate_bps(double r_nats, double delta_f_hz) noexcept {
  return delta_f_hz * r_nats / 0.69314718055994530942;
}

struct McsChoice {
  std::string_view modulation;  ///< empty when nothing can be sent
  int modulation_bits = 0;
  double coding_rate = 0.0;
  double bits_per_symbol = 0.0;
};

/// Highest modulation x coding product not above `spectral_eff_bits`
/// (QPSK/16QAM/32QAM/64QAM x {1/2, 2/3, 3/4, 7/8}); equal products resolve
/// to the lower-order modulation.
McsChoice quantize_mcs(double spectral_eff_bits) noexcept;

class ChannelModel {
 public:
  explicit ChannelModel(ChannelParams params);

  const ChannelParams& params() const noexcept { return params_; }
  double effective_gamma() const noexcept { return gamma_eff_; }

  /// Users placed uniformly in the cell with speeds ~ N(mean, std) clipped
  /// at zero, uniform headings and stationary shadowing.
  std::vector<UserMobilityState> spawn_users(std::size_t n, Rng& rng) const;

  /// Stationary taps for every user and the matching beta matrix.
  ChannelState initial_state(const std::vector<UserMobilityState>& users, Rng& rng) const;

  /// AR(1) coefficient of the taps for a user moving at `speed` over `dt`.
  double fading_rho(double speed, double dt) const noexcept;

  /// Expected beta (unit mean |H|^2) at a distance and shadowing value.
  double mean_beta(double distance_m, double shadowing_db) const;

  std::vector<std::complex<double>> frequency_response(const std::vector<std::complex<double>>& taps) const;

  void recompute_beta(ChannelState& state, const std::vector<UserMobilityState>& users) const;

  const std::vector<double>& tap_powers() const noexcept { return tap_power_; }

 private:
  ChannelParams params_;
  double gamma_eff_ = 0.0;
  std::vector<double> tap_power_;
  std::vector<double> tw_re_;  // K x L twiddles
  std::vector<double> tw_im_;
};

/// Advances mobility (straight-line with reflection at the cell edge),
/// shadowing (AR(1) in dB) and the taps (complex AR(1)), then recomputes
/// beta. Deterministic for a given generator state.
ChannelState step_channel(const ChannelModel& model, ChannelState state, std::vector<UserMobilityState>& users,
                          double dt, Rng& rng);

}  // namespace numax
