#include "cdna/radio.hpp"

#include <algorithm>
#include <cmath>

#include "cdna/error.hpp"

namespace cdna {

double path_gain(double distance_m, double alpha) {
  if (!(distance_m > 0)) throw DomainError("path_gain: distance must be > 0");
  return std::pow(std::max(distance_m, kNearFieldDistanceM), -alpha);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double rate_bps(double sinr_linear, const RadioParams& radio) {
  return radio.channel_bandwidth_hz * std::log2(1.0 + std::max(sinr_linear, 0.0) / radio.snr_gap);
}

double deliverable_mb(double demand_mb, double rate_bps, double duration_s, double snapshot_duration_s,
                      double free_quota_mb) {
  const double airtime_mb = rate_bps * std::min(duration_s, snapshot_duration_s) / 8e6;
  return std::max(0.0, std::min({demand_mb, airtime_mb, free_quota_mb}));
}

LinkBudget::LinkBudget(const Scenario& s)
    : num_sus_(s.num_sus()),
      num_pus_(s.num_pus()),
      distance_(num_sus_ * num_pus_),
      rx_power_(num_sus_ * num_pus_),
      noise_(s.num_channels()),
      threshold_(num_sus_),
      in_range_(num_sus_ * num_pus_) {
  for (std::size_t i = 0; i < num_sus_; ++i) {
    threshold_[i] = db_to_linear(s.sus[i].min_sinr_db);
    for (std::size_t j = 0; j < num_pus_; ++j) {
      // Co-located nodes are clamped to the near-field distance.
      const double d = std::max(distance_m(s.sus[i].position, s.pus[j].position), kNearFieldDistanceM);
      distance_[i * num_pus_ + j] = d;
      rx_power_[i * num_pus_ + j] = s.radio.tx_power_watts * path_gain(d, s.radio.path_loss_exponent);
      in_range_[i * num_pus_ + j] = !s.radio.max_link_distance_m || d <= *s.radio.max_link_distance_m;
    }
  }
  for (std::size_t b = 0; b < s.num_channels(); ++b) {
    noise_[b] = s.radio.noise_power_watts +
                (s.channels[b].sharing_mode == SharingMode::Concurrent ? s.radio.primary_interference_watts : 0.0);
  }
}

double sinr(const Scenario& s, const Matching& m, std::size_t su, Slot slot) {
  const auto& radio = s.radio;
  const auto& rx = s.pus[slot.pu].position;
  auto received = [&](std::size_t k) {
    const double d = std::max(distance_m(s.sus[k].position, rx), kNearFieldDistanceM);
    return radio.tx_power_watts * path_gain(d, radio.path_loss_exponent);
  };
  double interference = 0.0;
  for (std::size_t k = 0; k < m.num_sus(); ++k) {
    if (k == su || !m.is_assigned(k)) continue;
    if (m.at(k)->slot.channel == slot.channel) interference += received(k);
  }
  double noise = radio.noise_power_watts;
  if (s.channels[slot.channel].sharing_mode == SharingMode::Concurrent) noise += radio.primary_interference_watts;
  return received(su) / (noise + interference);
}

LinkStats link_stats(const Scenario& s, const Matching& m, std::size_t su, Slot slot) {
  LinkStats out;
  out.distance_m = distance_m(s.sus[su].position, s.pus[slot.pu].position);
  out.sinr_linear = sinr(s, m, su, slot);
  out.rate_bps = rate_bps(out.sinr_linear, s.radio);
  const bool in_range = !s.radio.max_link_distance_m || out.distance_m <= *s.radio.max_link_distance_m;
  out.feasible = in_range && out.sinr_linear >= db_to_linear(s.sus[su].min_sinr_db);
  return out;
}

double deliverable_mb(const Scenario& s, std::size_t su, double rate, std::size_t pu, const Matching& m) {
  double committed = 0.0;
  for (std::size_t k = 0; k < m.num_sus(); ++k) {
    if (k != su && m.is_assigned(k) && m.at(k)->slot.pu == pu) committed += m.at(k)->q_mb;
  }
  const auto& user = s.sus[su];
  return deliverable_mb(user.demand_mb, rate, user.duration_s, s.market.snapshot_duration_s,
                        s.pus[pu].quota_remaining_mb - committed);
}

}  // namespace cdna
