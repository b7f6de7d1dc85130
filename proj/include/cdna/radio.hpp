#pragma once

#include <cstddef>
#include <vector>

#include "cdna/assignment.hpp"
#include "cdna/scenario.hpp"

namespace cdna {

inline constexpr double kNearFieldDistanceM = 1.0;

/// max(d, 1 m)^-alpha. Throws DomainError for d <= 0.
double path_gain(double distance_m, double alpha);

double db_to_linear(double db);

/// W log2(1 + sinr / gap).
double rate_bps(double sinr_linear, const RadioParams& radio);

/// min(demand, rate * min(duration, T) / 8e6, free quota), floored at 0.
double deliverable_mb(double demand_mb, double rate_bps, double duration_s, double snapshot_duration_s,
                      double free_quota_mb);

struct LinkStats {
  double distance_m = 0.0;
  double sinr_linear = 0.0;
  double rate_bps = 0.0;
  bool feasible = false;
};

/// Precomputed SU->PU geometry and received powers for one scenario.
class LinkBudget {
 public:
  explicit LinkBudget(const Scenario& scenario);

  std::size_t num_sus() const { return num_sus_; }
  std::size_t num_pus() const { return num_pus_; }
  double distance(std::size_t su, std::size_t pu) const { return distance_[su * num_pus_ + pu]; }
  /// Power received at PU `pu` from SU `su` (W).
  double rx_power(std::size_t su, std::size_t pu) const { return rx_power_[su * num_pus_ + pu]; }
  /// Noise plus the primary interference floor on Concurrent channels (W).
  double noise(std::size_t channel) const { return noise_[channel]; }
  double threshold(std::size_t su) const { return threshold_[su]; }
  bool in_range(std::size_t su, std::size_t pu) const { return in_range_[su * num_pus_ + pu]; }
  bool feasible(std::size_t su, std::size_t pu, double sinr) const {
    return in_range(su, pu) && sinr >= threshold_[su];
  }

 private:
  std::size_t num_sus_;
  std::size_t num_pus_;
  std::vector<double> distance_;
  std::vector<double> rx_power_;
  std::vector<double> noise_;
  std::vector<double> threshold_;
  std::vector<char> in_range_;
};

/// SINR of `su` transmitting to slot.pu on slot.channel, with interference
/// from every other SU that `m` assigns to the same channel, measured at the
/// receiving PU. `su` itself is excluded whether or not it is assigned.
double sinr(const Scenario& s, const Matching& m, std::size_t su, Slot slot);

LinkStats link_stats(const Scenario& s, const Matching& m, std::size_t su, Slot slot);

/// Deliverable volume for `su` at `pu` given the rate, counting the volume
/// `m` already commits to other SUs at that PU (cached trade terms).
double deliverable_mb(const Scenario& s, std::size_t su, double rate_bps, std::size_t pu, const Matching& m);

}  // namespace cdna
