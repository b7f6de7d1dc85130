#pragma once

// Test helpers: a builder for hand-placed scenarios and a brute-force
// reference evaluator written directly from the model's formulas. The
// reference shares no code with the library beyond the Scenario type.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "cdna/assignment.hpp"
#include "cdna/scenario.hpp"

namespace cdna::test {

struct HandSu {
  double x = 0;
  double y = 0;
  double demand_mb = 1000;
  double min_sinr_db = 1;
  double duration_s = 900;
  double valuation_eur_gb = 1.0;
  bool exceeded = true;
};

struct HandPu {
  double x = 0;
  double y = 0;
  double quota_mb = 10000;
  double ask_eur_gb = 0.5;
};

inline Scenario hand_scenario(const std::vector<HandPu>& pus, const std::vector<HandSu>& sus,
                              std::size_t channels, double area = 1000) {
  Scenario s;
  s.area_side_m = area;
  for (std::size_t j = 0; j < pus.size(); ++j) {
    s.pus.push_back(PrimaryUser{j, {pus[j].x, pus[j].y}, pus[j].quota_mb, pus[j].ask_eur_gb});
  }
  for (std::size_t i = 0; i < sus.size(); ++i) {
    const auto& h = sus[i];
    s.sus.push_back(SecondaryUser{i, {h.x, h.y}, h.demand_mb, h.min_sinr_db, h.duration_s, h.valuation_eur_gb,
                                  h.exceeded, 0.0});
  }
  for (std::size_t b = 0; b < channels; ++b) s.channels.push_back(Channel{b, SharingMode::Orthogonal});
  return s;
}

/// Per-SU slot index pu * B + channel, or -1 when unmatched.
using Assign = std::vector<int>;

struct Reference {
  bool valid = true;
  double su_total = 0;
  double pu_total = 0;
  std::vector<double> q_mb;
  std::vector<double> su_utility;
  std::vector<double> pu_utility;
  double welfare() const { return su_total + pu_total; }
};

inline Reference reference_evaluate(const Scenario& s, const Assign& a, const std::vector<double>& pi) {
  const std::size_t n = s.sus.size(), M = s.pus.size(), B = s.channels.size();
  const auto& r = s.radio;
  auto received = [&](std::size_t i, std::size_t j) {
    const double d = std::hypot(s.sus[i].position.x_m - s.pus[j].position.x_m,
                                s.sus[i].position.y_m - s.pus[j].position.y_m);
    return r.tx_power_watts * std::pow(std::max(d, 1.0), -r.path_loss_exponent);
  };
  Reference out;
  out.q_mb.assign(n, 0);
  out.su_utility.assign(n, 0);
  out.pu_utility.assign(M, 0);
  std::vector<double> request(n, 0);
  std::vector<bool> ok(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] < 0) continue;
    const std::size_t j = a[i] / B, c = a[i] % B;
    double interference = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != i && a[k] >= 0 && static_cast<std::size_t>(a[k]) % B == c) interference += received(k, j);
    double noise = r.noise_power_watts;
    if (s.channels[c].sharing_mode == SharingMode::Concurrent) noise += r.primary_interference_watts;
    const double sinr = received(i, j) / (noise + interference);
    const double d = std::hypot(s.sus[i].position.x_m - s.pus[j].position.x_m,
                                s.sus[i].position.y_m - s.pus[j].position.y_m);
    const bool in_range = !r.max_link_distance_m || std::max(d, 1.0) <= *r.max_link_distance_m;
    const bool feasible = in_range && sinr >= std::pow(10.0, s.sus[i].min_sinr_db / 10.0);
    const double rate = r.channel_bandwidth_hz * std::log2(1 + sinr / r.snr_gap);
    const double t = std::min(s.sus[i].duration_s, s.market.snapshot_duration_s);
    request[i] = feasible ? std::min(s.sus[i].demand_mb, rate * t / 8e6) : 0.0;
    ok[i] = feasible;
  }
  const double energy = s.market.energy_per_mb_joule * 1000 * s.market.energy_price_eur_joule;
  for (std::size_t j = 0; j < M; ++j) {
    std::vector<std::size_t> at;
    for (std::size_t i = 0; i < n; ++i)
      if (a[i] >= 0 && static_cast<std::size_t>(a[i]) / B == j) at.push_back(i);
    std::stable_sort(at.begin(), at.end(), [&](std::size_t x, std::size_t y) { return request[x] > request[y]; });
    double left = s.pus[j].quota_remaining_mb;
    for (std::size_t i : at) {
      const double q = std::max(0.0, std::min(request[i], left));
      left -= q;
      out.q_mb[i] = q;
      out.su_utility[i] = q == 0 ? 0.0 : (s.sus[i].valuation_eur_gb - pi[j]) * q / 1000;
      out.su_total += out.su_utility[i];
      out.pu_utility[j] += (pi[j] - energy) * q / 1000;
      if (!ok[i] || q <= 1e-9 || s.sus[i].valuation_eur_gb <= pi[j] || pi[j] <= energy) out.valid = false;
    }
    out.pu_total += out.pu_utility[j];
  }
  return out;
}

inline bool reference_participates(const SecondaryUser& su) { return su.plan_exceeded || su.reward_eur > 0; }

/// Calls visit(assign) for every assignment of participants to slots or
/// unmatched, with no pruning.
template <class Visit>
void reference_enumerate(const Scenario& s, Visit&& visit) {
  const std::size_t n = s.sus.size();
  const int slots = static_cast<int>(s.pus.size() * s.channels.size());
  std::vector<std::size_t> who;
  for (std::size_t i = 0; i < n; ++i)
    if (reference_participates(s.sus[i])) who.push_back(i);
  Assign a(n, -1);
  for (;;) {
    visit(static_cast<const Assign&>(a));
    std::size_t k = 0;
    while (k < who.size() && a[who[k]] == slots - 1) a[who[k++]] = -1;
    if (k == who.size()) return;
    ++a[who[k]];
  }
}

/// No unmatched participant can join a slot with the result valid, itself
/// better off and the receiving PU strictly better off.
inline bool reference_maximal(const Scenario& s, const Assign& a, const std::vector<double>& pi) {
  const Reference base = reference_evaluate(s, a, pi);
  const int slots = static_cast<int>(s.pus.size() * s.channels.size());
  const std::size_t B = s.channels.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] >= 0 || !reference_participates(s.sus[i])) continue;
    for (int x = 0; x < slots; ++x) {
      Assign b = a;
      b[i] = x;
      const Reference e = reference_evaluate(s, b, pi);
      if (e.valid && e.su_utility[i] > 0 && e.pu_utility[x / B] > base.pu_utility[x / B] + 1e-12) return false;
    }
  }
  return true;
}

inline std::size_t reference_participants(const Scenario& s) {
  return static_cast<std::size_t>(std::count_if(s.sus.begin(), s.sus.end(), reference_participates));
}

inline Assign to_assign(const Matching& m, std::size_t channels) {
  Assign a(m.num_sus(), -1);
  for (std::size_t i = 0; i < m.num_sus(); ++i)
    if (m.is_assigned(i)) a[i] = static_cast<int>(m.at(i)->slot.pu * channels + m.at(i)->slot.channel);
  return a;
}

/// Every SU sits at the centre of a circle of PUs, so all SUs rank every
/// (PU, channel) pair identically. Prices start at the floor and quotas are
/// ample, so the market clears in one price round.
inline Scenario identical_preference_scenario(std::size_t n, std::size_t m, std::size_t b) {
  constexpr double kPi = 3.14159265358979323846;
  std::vector<HandPu> pus;
  for (std::size_t j = 0; j < m; ++j) {
    const double angle = 2 * kPi * static_cast<double>(j) / static_cast<double>(m);
    pus.push_back(HandPu{50 + 10 * std::cos(angle), 50 + 10 * std::sin(angle), 1e6, 0.1});
  }
  std::vector<HandSu> sus(n, HandSu{50, 50, 100, 1, 900, 1.0, true});
  return hand_scenario(pus, sus, b, 100);
}

}  // namespace cdna::test
