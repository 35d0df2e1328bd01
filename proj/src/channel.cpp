#include "numax/channel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "numax/error.hpp"

namespace numax {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

double dbm_to_w(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

struct McsEntry {
  std::string_view name;
  int bits;
  double rate;
};

// Ordered by modulation so that equal products keep the lower order.
constexpr std::array<McsEntry, 16> kMcsTable{{
    {"QPSK", 2, 1.0 / 2}, {"QPSK", 2, 2.0 / 3}, {"QPSK", 2, 3.0 / 4}, {"QPSK", 2, 7.0 / 8},
    {"16QAM", 4, 1.0 / 2}, {"16QAM", 4, 2.0 / 3}, {"16QAM", 4, 3.0 / 4}, {"16QAM", 4, 7.0 / 8},
    {"32QAM", 5, 1.0 / 2}, {"32QAM", 5, 2.0 / 3}, {"32QAM", 5, 3.0 / 4}, {"32QAM", 5, 7.0 / 8},
    {"64QAM", 6, 1.0 / 2}, {"64QAM", 6, 2.0 / 3}, {"64QAM", 6, 3.0 / 4}, {"64QAM", 6, 7.0 / 8},
}};

}  // namespace

LinkBudget LinkBudget::make(double bandwidth_hz, int n_subcarriers, double tx_power_dbm, double noise_dbm,
                            double ber_target) {
  if (!(bandwidth_hz > 0.0) || n_subcarriers < 1)
    throw Error(Errc::DomainError, "bandwidth and subcarrier count must be positive");
  LinkBudget b;
  b.bandwidth_hz = bandwidth_hz;
  b.n_subcarriers = n_subcarriers;
  b.delta_f_hz = bandwidth_hz / n_subcarriers;
  b.tx_power_dbm = tx_power_dbm;
  b.noise_dbm_per_subcarrier = noise_dbm;
  b.ber_target = ber_target;
  b.gamma = gamma_from_ber(ber_target);
  return b;
}

double LinkBudget::tx_power_w() const noexcept { return dbm_to_w(tx_power_dbm); }
double LinkBudget::noise_w() const noexcept { return dbm_to_w(noise_dbm_per_subcarrier); }

double UserMobilityState::distance() const noexcept { return std::hypot(position.x, position.y); }

double path_loss_db(double d_m) {
  if (!(d_m >= 1.0)) throw Error(Errc::DomainError, "path loss needs d >= 1 m, got " + std::to_string(d_m));
  return 38.4 + 20.0 * std::log10(d_m);
}

double gamma_from_ber(double ber) {
  if (!(ber > 0.0 && ber <= 0.2)) throw Error(Errc::DomainError, "BER target must lie in (0, 0.2]");
  return -std::log(5.0 * ber) / 1.5;
}

McsChoice quantize_mcs(double spectral_eff_bits) noexcept {
  McsChoice best;
  for (const auto& e : kMcsTable) {
    const double product = e.bits * e.rate;
    if (product <= spectral_eff_bits + 1e-12 && product > best.bits_per_symbol + 1e-12) {
      best = {e.name, e.bits, e.rate, product};
    }
  }
  return best;
}

ChannelModel::ChannelModel(ChannelParams params) : params_(std::move(params)) {
  const auto& link = params_.link;
  if (params_.gamma_divides && !(link.gamma > 0.0))
    throw Error(Errc::DomainError, "a zero SNR gap cannot divide the SNR");
  if (!(params_.cell_radius_m >= 1.0)) throw Error(Errc::DomainError, "cell radius must be at least 1 m");
  if (params_.n_taps < 1) throw Error(Errc::DomainError, "need at least one fading tap");
  if (params_.fading_ar && !(*params_.fading_ar >= 0.0 && *params_.fading_ar <= 1.0))
    throw Error(Errc::DomainError, "fading AR coefficient must lie in [0, 1]");
  gamma_eff_ = params_.gamma_divides ? 1.0 / link.gamma : link.gamma;

  const auto taps = static_cast<std::size_t>(params_.n_taps);
  tap_power_.resize(taps);
  double total = 0.0;
  for (std::size_t l = 0; l < taps; ++l) {
    tap_power_[l] = std::exp(-static_cast<double>(l) / params_.tap_decay);
    total += tap_power_[l];
  }
  for (auto& p : tap_power_) p /= total;

  const auto k_count = static_cast<std::size_t>(link.n_subcarriers);
  tw_re_.resize(k_count * taps);
  tw_im_.resize(k_count * taps);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t l = 0; l < taps; ++l) {
      const double phase = -2.0 * std::numbers::pi * static_cast<double>((k * l) % k_count) / k_count;
      tw_re_[k * taps + l] = std::cos(phase);
      tw_im_[k * taps + l] = std::sin(phase);
    }
  }
}

std::vector<UserMobilityState> ChannelModel::spawn_users(std::size_t n, Rng& rng) const {
  std::vector<UserMobilityState> users(n);
  for (auto& u : users) {
    const double r = params_.cell_radius_m * std::sqrt(rng.uniform());
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    u.position = {r * std::cos(angle), r * std::sin(angle)};
    u.speed = std::max(0.0, rng.normal(params_.speed_mean_mps, params_.speed_std_mps));
    u.heading = 2.0 * std::numbers::pi * rng.uniform();
    u.shadowing_db = rng.normal(0.0, params_.shadow_sigma_db);
  }
  return users;
}

ChannelState ChannelModel::initial_state(const std::vector<UserMobilityState>& users, Rng& rng) const {
  ChannelState state;
  state.taps.resize(users.size());
  for (auto& taps : state.taps) {
    taps.resize(tap_power_.size());
    for (std::size_t l = 0; l < taps.size(); ++l) {
      const double s = std::sqrt(tap_power_[l] / 2.0);
      taps[l] = {s * rng.normal(), s * rng.normal()};
    }
  }
  recompute_beta(state, users);
  return state;
}

double ChannelModel::fading_rho(double speed, double dt) const noexcept {
  if (params_.fading_ar) return *params_.fading_ar;
  const double doppler = speed * params_.carrier_hz / kSpeedOfLight;
  if (doppler <= 0.0) return 1.0;
  const double coherence = 9.0 / (16.0 * std::numbers::pi * doppler);
  return std::exp(-dt / coherence);
}

double ChannelModel::mean_beta(double distance_m, double shadowing_db) const {
  const double loss_db = path_loss_db(std::max(distance_m, 1.0)) - shadowing_db;
  return gamma_eff_ * std::pow(10.0, -loss_db / 10.0) / params_.link.noise_w();
}

std::vector<std::complex<double>> ChannelModel::frequency_response(
    const std::vector<std::complex<double>>& taps) const {
  const std::size_t k_count = static_cast<std::size_t>(params_.link.n_subcarriers);
  const std::size_t l_count = tap_power_.size();
  std::vector<std::complex<double>> h(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t l = 0; l < l_count; ++l) {
      const double wr = tw_re_[k * l_count + l], wi = tw_im_[k * l_count + l];
      re += taps[l].real() * wr - taps[l].imag() * wi;
      im += taps[l].real() * wi + taps[l].imag() * wr;
    }
    h[k] = {re, im};
  }
  return h;
}

void ChannelModel::recompute_beta(ChannelState& state, const std::vector<UserMobilityState>& users) const {
  const std::size_t k_count = static_cast<std::size_t>(params_.link.n_subcarriers);
  const std::size_t l_count = tap_power_.size();
  if (state.beta.users() != users.size() || state.beta.subcarriers() != k_count)
    state.beta = BetaMatrix(users.size(), k_count);
  for (std::size_t i = 0; i < users.size(); ++i) {
    const double g = mean_beta(users[i].distance(), users[i].shadowing_db);
    const auto& taps = state.taps[i];
    for (std::size_t k = 0; k < k_count; ++k) {
      double re = 0.0, im = 0.0;
      const double* wr = &tw_re_[k * l_count];
      const double* wi = &tw_im_[k * l_count];
      for (std::size_t l = 0; l < l_count; ++l) {
        re += taps[l].real() * wr[l] - taps[l].imag() * wi[l];
        im += taps[l].real() * wi[l] + taps[l].imag() * wr[l];
      }
      state.beta(i, k) = g * (re * re + im * im);
    }
  }
}

ChannelState step_channel(const ChannelModel& model, ChannelState state, std::vector<UserMobilityState>& users,
                          double dt, Rng& rng) {
  if (!(dt > 0.0)) throw Error(Errc::DomainError, "channel step needs dt > 0");
  const auto& p = model.params();
  const double radius = p.cell_radius_m;
  const auto& tap_power = model.tap_powers();

  for (std::size_t i = 0; i < users.size(); ++i) {
    auto& u = users[i];

    // Straight-line motion, mirrored back inside at the cell edge.
    const double step = u.speed * dt;
    double vx = std::cos(u.heading), vy = std::sin(u.heading);
    u.position.x += vx * step;
    u.position.y += vy * step;
    for (int bounce = 0; bounce < 8; ++bounce) {
      const double r = u.distance();
      if (r <= radius) break;
      const double nx = u.position.x / r, ny = u.position.y / r;
      const double mirrored = std::max(2.0 * radius - r, 0.0);
      u.position = {nx * mirrored, ny * mirrored};
      const double dot = vx * nx + vy * ny;
      vx -= 2.0 * dot * nx;
      vy -= 2.0 * dot * ny;
      u.heading = std::atan2(vy, vx);
    }

    const double shadow_rho = std::exp(-step / p.shadow_decorrelation_m);
    const double shadow_draw = rng.normal();
    if (!p.shadow_frozen)
      u.shadowing_db = shadow_rho * u.shadowing_db +
                       std::sqrt(std::max(0.0, 1.0 - shadow_rho * shadow_rho)) * p.shadow_sigma_db * shadow_draw;

    const double rho = model.fading_rho(u.speed, dt);
    const double innovation = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    auto& taps = state.taps[i];
    for (std::size_t l = 0; l < taps.size(); ++l) {
      const double s = innovation * std::sqrt(tap_power[l] / 2.0);
      const double re = rng.normal(), im = rng.normal();
      taps[l] = rho * taps[l] + std::complex<double>(s * re, s * im);
    }
  }

  model.recompute_beta(state, users);
  ++state.frame_index;
  return state;
}

}  // namespace numax
