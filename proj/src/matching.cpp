#include "cdna/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include <json.hpp>

#include "cdna/error.hpp"

namespace cdna {

namespace {

// Slack on SINR pre-filters so rounding in the power sums never hides a
// candidate that the exact evaluation would admit.
constexpr double kSinrSlack = 1e-9;
constexpr std::size_t kMaxSwapsPerPhase = 1'000'000;

}  // namespace

// ---------------------------------------------------------------------------
// MarketView

MarketView::MarketView(const Scenario& scenario, MarketPrices prices)
    : scenario_(&scenario), prices_(std::move(prices)), budget_(scenario), participant_(scenario.num_sus()) {
  if (prices_.pi_eur_gb.size() != scenario.num_pus()) {
    throw ConfigError("prices.pi_eur_gb: expected one price per PU");
  }
  for (std::size_t i = 0; i < scenario.num_sus(); ++i) participant_[i] = participates(scenario.sus[i]);
}

void MarketView::set_prices(MarketPrices prices) {
  if (prices.pi_eur_gb.size() != scenario_->num_pus()) {
    throw ConfigError("prices.pi_eur_gb: expected one price per PU");
  }
  prices_ = std::move(prices);
}

double MarketView::request_mb(std::size_t su, double sinr) const {
  const auto& s = *scenario_;
  const auto& user = s.sus[su];
  return deliverable_mb(user.demand_mb, rate_bps(sinr, s.radio), user.duration_s, s.market.snapshot_duration_s,
                        std::numeric_limits<double>::infinity());
}

Evaluation MarketView::evaluate(const Matching& m) const {
  const auto& s = *scenario_;
  const std::size_t num_pus = s.num_pus();
  Evaluation ev;
  ev.links.assign(s.num_sus(), LinkOutcome{});
  ev.pu_utility.assign(num_pus, 0.0);

  std::vector<std::vector<std::size_t>> on_channel(s.num_channels());
  std::vector<std::vector<std::size_t>> at_pu(num_pus);
  for (std::size_t i = 0; i < m.num_sus(); ++i) {
    if (!m.is_assigned(i)) continue;
    const Slot slot = m.at(i)->slot;
    on_channel[slot.channel].push_back(i);
    at_pu[slot.pu].push_back(i);
  }

  for (std::size_t c = 0; c < on_channel.size(); ++c) {
    const auto& members = on_channel[c];
    for (std::size_t i : members) {
      const std::size_t j = m.at(i)->slot.pu;
      double interference = 0.0;
      for (std::size_t k : members)
        if (k != i) interference += budget_.rx_power(k, j);
      auto& link = ev.links[i];
      link.sinr = budget_.rx_power(i, j) / (budget_.noise(c) + interference);
      link.feasible = budget_.feasible(i, j, link.sinr);
      link.rate_bps = rate_bps(link.sinr, s.radio);
      link.request_mb = link.feasible ? request_mb(i, link.sinr) : 0.0;
    }
  }

  const double energy = s.market.energy_cost_eur_gb();
  for (std::size_t j = 0; j < num_pus; ++j) {
    auto& members = at_pu[j];
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      if (ev.links[a].request_mb != ev.links[b].request_mb) return ev.links[a].request_mb > ev.links[b].request_mb;
      return a < b;
    });
    const double pi = prices_.pi_eur_gb[j];
    double residual = s.pus[j].quota_remaining_mb;
    double volume = 0.0;
    for (std::size_t i : members) {
      auto& link = ev.links[i];
      link.q_mb = std::max(0.0, std::min(link.request_mb, residual));
      residual -= link.q_mb;
      volume += link.q_mb;
      link.su_utility = su_utility(s.sus[i].valuation_eur_gb, pi, link.q_mb);
      ev.su_total += link.su_utility;
      const bool rational = s.sus[i].valuation_eur_gb > pi && pi > energy;
      if (!link.feasible || link.q_mb <= kMinTradeMb || !rational) ev.valid = false;
    }
    ev.pu_utility[j] = pu_margin_eur_gb(pi, s.market) * volume / 1000.0;
    ev.pu_total += ev.pu_utility[j];
  }
  return ev;
}

void MarketView::realize(Matching& m) const {
  const Evaluation ev = evaluate(m);
  for (std::size_t i = 0; i < m.num_sus(); ++i) {
    if (m.is_assigned(i)) m.set_terms(i, ev.links[i].q_mb, prices_.pi_eur_gb[m.at(i)->slot.pu]);
  }
}

std::vector<double> MarketView::channel_power(const Matching& m) const {
  const std::size_t num_pus = scenario_->num_pus();
  std::vector<double> power(scenario_->num_channels() * num_pus, 0.0);
  for (std::size_t k = 0; k < m.num_sus(); ++k) {
    if (!m.is_assigned(k)) continue;
    double* row = &power[m.at(k)->slot.channel * num_pus];
    for (std::size_t j = 0; j < num_pus; ++j) row[j] += budget_.rx_power(k, j);
  }
  return power;
}

double MarketView::sinr_against(const std::vector<double>& power, const Matching& m, std::size_t su,
                                Slot slot) const {
  double interference = power[slot.channel * scenario_->num_pus() + slot.pu];
  if (m.is_assigned(su) && m.at(su)->slot.channel == slot.channel) interference -= budget_.rx_power(su, slot.pu);
  return budget_.rx_power(su, slot.pu) / (budget_.noise(slot.channel) + std::max(interference, 0.0));
}

bool MarketView::can_enter(Matching& m, const Evaluation& before, std::size_t su, Slot slot,
                           Evaluation* after) const {
  const auto& s = *scenario_;
  if (!participant_[su] || m.is_assigned(su)) return false;
  const double pi = prices_.pi_eur_gb[slot.pu];
  if (s.sus[su].valuation_eur_gb <= pi || pu_margin_eur_gb(pi, s.market) <= 0) return false;
  m.assign(su, slot);
  Evaluation ev = evaluate(m);
  m.unassign(su);
  const bool ok = ev.valid && ev.links[su].su_utility > 0 &&
                  ev.pu_utility[slot.pu] > before.pu_utility[slot.pu] + kUtilityTolerance;
  if (ok && after) *after = std::move(ev);
  return ok;
}

bool MarketView::link_valid(const Evaluation& ev, std::size_t su, Slot slot) const {
  const auto& user = scenario_->sus[su];
  const double pi = prices_.pi_eur_gb[slot.pu];
  const auto& link = ev.links[su];
  return link.feasible && link.q_mb > kMinTradeMb && user.valuation_eur_gb > pi &&
         pu_margin_eur_gb(pi, scenario_->market) > 0;
}

// ---------------------------------------------------------------------------
// Preferences

namespace {

bool entry_order(const PreferenceEntry& a, const PreferenceEntry& b) {
  if (a.utility != b.utility) return a.utility > b.utility;
  if (a.counterpart != b.counterpart) return a.counterpart < b.counterpart;
  return a.channel < b.channel;
}

}  // namespace

Preferences build_preferences(const MarketView& view, const Matching& m) {
  const auto& s = view.scenario();
  const auto& budget = view.budget();
  const std::size_t num_pus = s.num_pus();
  const Evaluation ev = view.evaluate(m);
  const auto power = view.channel_power(m);

  struct Held {
    std::size_t su;
    double request_mb;
    double q_mb;
  };
  std::vector<std::vector<Held>> held(num_pus);
  for (std::size_t k = 0; k < m.num_sus(); ++k) {
    if (m.is_assigned(k)) held[m.at(k)->slot.pu].push_back({k, ev.links[k].request_mb, ev.links[k].q_mb});
  }

  Preferences prefs;
  prefs.su.resize(s.num_sus());
  prefs.pu.resize(num_pus);
  for (std::size_t j = 0; j < num_pus; ++j) prefs.pu[j].owner = j;

  for (std::size_t i = 0; i < s.num_sus(); ++i) {
    prefs.su[i].owner = i;
    if (!view.participant(i)) continue;
    const auto& user = s.sus[i];
    for (std::size_t idx = 0; idx < view.num_slots(); ++idx) {
      const Slot slot = view.slot_at(idx);
      const double pi = view.prices().pi_eur_gb[slot.pu];
      const double margin = pu_margin_eur_gb(pi, s.market);
      if (user.valuation_eur_gb <= pi || margin <= 0) continue;
      const double sinr = view.sinr_against(power, m, i, slot);
      if (!budget.feasible(i, slot.pu, sinr)) continue;
      const double request = view.request_mb(i, sinr);
      // Quota already promised to SUs the PU ranks ahead of this one.
      double ahead = 0.0;
      for (const auto& h : held[slot.pu]) {
        if (h.su == i) continue;
        if (h.request_mb > request || (h.request_mb == request && h.su < i)) ahead += h.q_mb;
      }
      const double q = std::max(0.0, std::min(request, s.pus[slot.pu].quota_remaining_mb - ahead));
      if (q <= kMinTradeMb) continue;
      prefs.su[i].entries.push_back({slot.pu, slot.channel, su_utility(user.valuation_eur_gb, pi, q)});
      prefs.pu[slot.pu].entries.push_back({i, slot.channel, margin * q / 1000.0});
    }
    std::sort(prefs.su[i].entries.begin(), prefs.su[i].entries.end(), entry_order);
  }
  for (auto& list : prefs.pu) std::sort(list.entries.begin(), list.entries.end(), entry_order);
  return prefs;
}

Preferences build_preferences(const Scenario& s, const Matching& m, const MarketPrices& prices) {
  return build_preferences(MarketView(s, prices), m);
}

// ---------------------------------------------------------------------------
// Trace

const char* to_string(SwapKind kind) {
  switch (kind) {
    case SwapKind::ChannelSwap: return "channel_swap";
    case SwapKind::Relocation: return "relocation";
    case SwapKind::Exchange: return "su_pu_swap";
  }
  return "?";
}

namespace {

void emit_link(std::ostream& out, const char* event, std::size_t round, std::size_t su, Slot slot) {
  nlohmann::ordered_json j{{"event", event}, {"round", round}, {"su", su}, {"pu", slot.pu}, {"channel", slot.channel}};
  out << j.dump() << '\n';
}

}  // namespace

void TraceWriter::propose(std::size_t r, std::size_t su, Slot slot) { emit_link(*out_, "propose", r, su, slot); }
void TraceWriter::accept(std::size_t r, std::size_t su, Slot slot) { emit_link(*out_, "accept", r, su, slot); }
void TraceWriter::reject(std::size_t r, std::size_t su, Slot slot) { emit_link(*out_, "reject", r, su, slot); }

void TraceWriter::swap(std::size_t r, const SwapAction& a) {
  nlohmann::ordered_json j{{"event", "swap"},
                           {"round", r},
                           {"kind", to_string(a.kind)},
                           {"su", a.su},
                           {"from", {{"pu", a.from.pu}, {"channel", a.from.channel}}},
                           {"to", {{"pu", a.to.pu}, {"channel", a.to.channel}}},
                           {"welfare_gain", a.welfare_gain}};
  if (a.partner) j["partner"] = *a.partner;
  *out_ << j.dump() << '\n';
}

void TraceWriter::price_update(std::size_t r, const MarketPrices& next, std::span<const double> demand,
                               std::span<const double> supply, bool converged) {
  nlohmann::ordered_json j{{"event", "price_update"},
                           {"round", r},
                           {"pi_eur_gb", next.pi_eur_gb},
                           {"demand_mb", std::vector<double>(demand.begin(), demand.end())},
                           {"supply_mb", std::vector<double>(supply.begin(), supply.end())},
                           {"converged", converged}};
  *out_ << j.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Proposal rounds

RoundResult propose_round(const MarketView& view, Matching& m, const Preferences& prefs, ProposalHistory& history,
                          Acceptance mode, TraceWriter* trace, std::size_t price_round) {
  const auto& s = view.scenario();
  const std::size_t num_channels = s.num_channels();
  RoundResult result;

  struct Candidate {
    std::size_t su;
    Slot slot;
    double rank = 0.0;
    bool fresh = false;
  };
  std::vector<std::vector<Candidate>> incoming(s.num_pus());
  for (std::size_t i = 0; i < s.num_sus(); ++i) {
    if (!view.participant(i) || m.is_assigned(i)) continue;
    for (const auto& e : prefs.su[i].entries) {
      const std::size_t idx = e.counterpart * num_channels + e.channel;
      if (history.contains(i, idx)) continue;
      history.mark(i, idx);
      const Slot slot{e.counterpart, e.channel};
      incoming[slot.pu].push_back({i, slot, 0.0, true});
      ++result.proposals;
      if (trace) trace->propose(price_round, i, slot);
      break;
    }
  }

  const Matching start = m;
  std::vector<Candidate> candidates;
  for (std::size_t j = 0; j < s.num_pus(); ++j) {
    if (incoming[j].empty()) continue;
    candidates.insert(candidates.end(), incoming[j].begin(), incoming[j].end());
    if (mode == Acceptance::Deferred) {
      for (std::size_t k : m.assigned_to(j)) {
        candidates.push_back({k, m.at(k)->slot, 0.0, false});
        m.unassign(k);
      }
    }
  }
  for (auto& c : candidates) {
    c.rank = -std::numeric_limits<double>::infinity();
    for (const auto& e : prefs.pu[c.slot.pu].entries) {
      if (e.counterpart == c.su && e.channel == c.slot.channel) {
        c.rank = e.utility;
        break;
      }
    }
  }
  // PUs decide concurrently; where their decisions interact, larger trades
  // are settled first.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.rank != b.rank) return a.rank > b.rank;
    if (a.slot.pu != b.slot.pu) return a.slot.pu < b.slot.pu;
    if (a.su != b.su) return a.su < b.su;
    return a.slot.channel < b.slot.channel;
  });

  Evaluation ev = view.evaluate(m);
  Evaluation next;
  for (const auto& c : candidates) {
    if (view.can_enter(m, ev, c.su, c.slot, &next)) {
      m.assign(c.su, c.slot);
      ev = std::move(next);
      if (c.fresh) {
        ++result.accepted;
        if (trace) trace->accept(price_round, c.su, c.slot);
      }
    } else if (trace) {
      trace->reject(price_round, c.su, c.slot);
    }
  }

  for (std::size_t j = 0; j < s.num_pus(); ++j) {
    std::vector<std::pair<std::size_t, Slot>> before, after;
    for (std::size_t k : start.assigned_to(j)) before.emplace_back(k, start.at(k)->slot);
    for (std::size_t k : m.assigned_to(j)) after.emplace_back(k, m.at(k)->slot);
    if (after != before) ++result.broadcasts;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Swaps

namespace {

struct SwapContext {
  const MarketView& view;
  const Matching& m;
  const Evaluation& ev;
  const std::vector<double>& power;

  // Upper bound on an SU's utility at `slot` given its exact SINR there.
  bool may_reach(std::size_t su, Slot slot, double sinr, double current) const {
    const auto& budget = view.budget();
    if (!(budget.in_range(su, slot.pu) && sinr * (1.0 + kSinrSlack) >= budget.threshold(su))) return false;
    const double pi = view.prices().pi_eur_gb[slot.pu];
    const double bound = su_utility(view.scenario().sus[su].valuation_eur_gb, pi, view.request_mb(su, sinr));
    return bound >= current - kUtilityTolerance - 1e-9 * std::abs(current);
  }
};

bool weakly_better(double after, double before) { return after >= before - kUtilityTolerance; }
bool strictly_better(double after, double before) { return after > before + kUtilityTolerance; }

// Evaluates the moved matching and checks the approval rule for the given
// involved agents. Returns the welfare gain when approved.
std::optional<double> approve(const MarketView& view, const Evaluation& ev, const Matching& moved,
                              std::initializer_list<std::size_t> sus, std::initializer_list<std::size_t> pus) {
  const Evaluation next = view.evaluate(moved);
  if (!next.valid) return std::nullopt;
  const double gain = next.welfare() - ev.welfare();
  if (gain < kWelfareEpsilon) return std::nullopt;
  bool strict = false;
  for (std::size_t i : sus) {
    if (!weakly_better(next.links[i].su_utility, ev.links[i].su_utility)) return std::nullopt;
    strict = strict || strictly_better(next.links[i].su_utility, ev.links[i].su_utility);
  }
  for (std::size_t j : pus) {
    if (!weakly_better(next.pu_utility[j], ev.pu_utility[j])) return std::nullopt;
    strict = strict || strictly_better(next.pu_utility[j], ev.pu_utility[j]);
  }
  if (!strict) return std::nullopt;
  return gain;
}

}  // namespace

std::optional<SwapAction> swap_search(const MarketView& view, const Matching& m) {
  const auto& s = view.scenario();
  const auto& budget = view.budget();
  const Evaluation ev = view.evaluate(m);
  if (!ev.valid) return std::nullopt;
  const auto power = view.channel_power(m);
  const SwapContext ctx{view, m, ev, power};
  const std::size_t num_pus = s.num_pus();

  std::vector<double> committed(num_pus, 0.0);
  for (std::size_t k = 0; k < m.num_sus(); ++k)
    if (m.is_assigned(k)) committed[m.at(k)->slot.pu] += ev.links[k].q_mb;

  Matching moved = m;
  for (std::size_t i = 0; i < m.num_sus(); ++i) {
    if (!m.is_assigned(i)) continue;
    const Slot from = m.at(i)->slot;
    const double ui = ev.links[i].su_utility;

    auto try_move = [&](Slot to, SwapKind kind, std::size_t involved_pu) -> std::optional<SwapAction> {
      const double sinr = view.sinr_against(power, m, i, to);
      if (!ctx.may_reach(i, to, sinr, ui)) return std::nullopt;
      moved.assign(i, to);
      auto gain = approve(view, ev, moved, {i}, {involved_pu});
      moved.assign(i, from);
      if (!gain) return std::nullopt;
      return SwapAction{kind, i, std::nullopt, from, to, *gain};
    };

    for (std::size_t c = 0; c < s.num_channels(); ++c) {
      if (c == from.channel) continue;
      if (auto a = try_move(Slot{from.pu, c}, SwapKind::ChannelSwap, from.pu)) return a;
    }
    for (std::size_t j = 0; j < num_pus; ++j) {
      if (j == from.pu || s.pus[j].quota_remaining_mb - committed[j] <= kMinTradeMb) continue;
      for (std::size_t c = 0; c < s.num_channels(); ++c) {
        if (auto a = try_move(Slot{j, c}, SwapKind::Relocation, j)) return a;
      }
    }
    for (std::size_t k = i + 1; k < m.num_sus(); ++k) {
      if (!m.is_assigned(k)) continue;
      const Slot other = m.at(k)->slot;
      if (other == from) continue;
      // Exact SINRs after the exchange: interference depends only on who
      // transmits on a channel, not on which PU they send to.
      auto exchanged_sinr = [&](std::size_t a, Slot a_from, std::size_t b, Slot a_to) {
        double interference = power[a_to.channel * num_pus + a_to.pu];
        if (a_from.channel == a_to.channel) {
          interference -= budget.rx_power(a, a_to.pu);
        } else {
          interference -= budget.rx_power(b, a_to.pu);
        }
        return budget.rx_power(a, a_to.pu) / (budget.noise(a_to.channel) + std::max(interference, 0.0));
      };
      if (!ctx.may_reach(i, other, exchanged_sinr(i, from, k, other), ui)) continue;
      if (!ctx.may_reach(k, from, exchanged_sinr(k, other, i, from), ev.links[k].su_utility)) continue;
      moved.assign(i, other);
      moved.assign(k, from);
      std::optional<double> gain = other.pu == from.pu ? approve(view, ev, moved, {i, k}, {from.pu})
                                                       : approve(view, ev, moved, {i, k}, {from.pu, other.pu});
      moved.assign(i, from);
      moved.assign(k, other);
      if (gain) return SwapAction{SwapKind::Exchange, i, k, from, other, *gain};
    }
  }
  return std::nullopt;
}

std::optional<SwapAction> swap_search(const Scenario& s, const Matching& m, const MarketPrices& prices) {
  return swap_search(MarketView(s, prices), m);
}

void apply(Matching& m, const SwapAction& a) {
  m.assign(a.su, a.to);
  if (a.kind == SwapKind::Exchange) m.assign(*a.partner, a.from);
}

// ---------------------------------------------------------------------------
// Stability

namespace {

// Cheap necessary conditions for `su` entering `slot`, checked before the
// exact evaluation.
bool entry_plausible(const MarketView& view, const std::vector<double>& power, const Matching& m, std::size_t su,
                     Slot slot) {
  const auto& s = view.scenario();
  const double pi = view.prices().pi_eur_gb[slot.pu];
  if (s.sus[su].valuation_eur_gb <= pi || pu_margin_eur_gb(pi, s.market) <= 0) return false;
  const auto& budget = view.budget();
  if (!budget.in_range(su, slot.pu)) return false;
  const double sinr = view.sinr_against(power, m, su, slot);
  return sinr * (1.0 + kSinrSlack) >= budget.threshold(su);
}

}  // namespace

StabilityReport is_stable(const MarketView& view, const Matching& m) {
  StabilityReport report;
  const Evaluation ev = view.evaluate(m);
  if (!ev.valid) {
    report.stable = false;
    return report;
  }
  if (auto a = swap_search(view, m)) {
    report.stable = false;
    report.blocking_swap = a;
    return report;
  }
  Matching probe = m;
  const auto power = view.channel_power(m);
  for (std::size_t i = 0; i < m.num_sus(); ++i) {
    if (m.is_assigned(i) || !view.participant(i)) continue;
    for (std::size_t idx = 0; idx < view.num_slots(); ++idx) {
      const Slot slot = view.slot_at(idx);
      if (!entry_plausible(view, power, m, i, slot)) continue;
      if (view.can_enter(probe, ev, i, slot)) {
        report.stable = false;
        report.blocking_su = i;
        report.blocking_slot = slot;
        return report;
      }
    }
  }
  return report;
}

StabilityReport is_stable(const Scenario& s, const Matching& m, const MarketPrices& prices) {
  return is_stable(MarketView(s, prices), m);
}

void demand_and_supply(const MarketView& view, const Matching& m, std::vector<double>& demand,
                       std::vector<double>& supply) {
  const auto& s = view.scenario();
  const auto& budget = view.budget();
  const auto power = view.channel_power(m);
  demand.assign(s.num_pus(), 0.0);
  supply.assign(s.num_pus(), 0.0);
  for (std::size_t j = 0; j < s.num_pus(); ++j) supply[j] = s.pus[j].quota_remaining_mb;
  for (std::size_t i = 0; i < s.num_sus(); ++i) {
    if (!view.participant(i)) continue;
    double best = 0.0;
    std::optional<std::size_t> best_pu;
    double best_request = 0.0;
    for (std::size_t idx = 0; idx < view.num_slots(); ++idx) {
      const Slot slot = view.slot_at(idx);
      const double pi = view.prices().pi_eur_gb[slot.pu];
      if (pu_margin_eur_gb(pi, s.market) <= 0) continue;
      const double sinr = view.sinr_against(power, m, i, slot);
      if (!budget.feasible(i, slot.pu, sinr)) continue;
      const double request = view.request_mb(i, sinr);
      const double u = su_utility(s.sus[i].valuation_eur_gb, pi, request);
      if (request > kMinTradeMb && u > best) {
        best = u;
        best_pu = slot.pu;
        best_request = request;
      }
    }
    if (best_pu) demand[*best_pu] += best_request;
  }
}

// ---------------------------------------------------------------------------
// Driver

namespace {

// Drops assignments that stopped being feasible or rational (e.g. after a
// price rise) until the matching is valid again.
void repair(const MarketView& view, Matching& m, TraceWriter* trace, std::size_t price_round) {
  for (;;) {
    const Evaluation ev = view.evaluate(m);
    if (ev.valid) return;
    for (std::size_t i = 0; i < m.num_sus(); ++i) {
      if (m.is_assigned(i) && !view.link_valid(ev, i, m.at(i)->slot)) {
        if (trace) trace->reject(price_round, i, m.at(i)->slot);
        m.unassign(i);
      }
    }
  }
}

std::size_t pus_touched(const SwapAction& a) { return a.from.pu == a.to.pu ? 1 : 2; }

}  // namespace

RunResult run_matching(const Scenario& s, const MarketPrices& initial, const RunOptions& options) {
  validate(initial);
  MarketView view(s, initial);
  Matching m(s.num_sus());
  RunStats stats;
  std::optional<TraceWriter> trace_writer;
  if (options.trace) trace_writer.emplace(*options.trace);
  TraceWriter* trace = trace_writer ? &*trace_writer : nullptr;

  ProposalHistory history(s.num_sus(), view.num_slots());
  MarketPrices prices = initial;
  std::vector<double> demand;
  std::vector<double> supply;

  for (std::size_t round = 1;; ++round) {
    stats.price_rounds = round;
    view.set_prices(prices);
    repair(view, m, trace, round);
    std::size_t round_proposals = 0;

    history.clear();
    for (;;) {
      const Preferences prefs = build_preferences(view, m);
      const RoundResult r = propose_round(view, m, prefs, history, Acceptance::Deferred, trace, round);
      if (r.proposals == 0) break;
      ++stats.rounds;
      stats.proposal_msgs += r.proposals;
      stats.broadcast_msgs += r.broadcasts;
      round_proposals += r.proposals;
    }

    for (;;) {
      std::size_t swaps = 0;
      while (auto action = swap_search(view, m)) {
        apply(m, *action);
        ++stats.swap_count;
        stats.broadcast_msgs += pus_touched(*action);
        if (trace) trace->swap(round, *action);
        if (++swaps > kMaxSwapsPerPhase) throw ContractViolation("swap phase failed to terminate");
      }

      // Late entry: an unmatched SU takes its best open slot, if any.
      bool entered = false;
      for (std::size_t i = 0; i < s.num_sus(); ++i) {
        if (m.is_assigned(i) || !view.participant(i)) continue;
        const Evaluation ev = view.evaluate(m);
        const auto power = view.channel_power(m);
        std::optional<Slot> best;
        double best_utility = 0.0;
        Evaluation next;
        for (std::size_t idx = 0; idx < view.num_slots(); ++idx) {
          const Slot slot = view.slot_at(idx);
          if (!entry_plausible(view, power, m, i, slot)) continue;
          if (view.can_enter(m, ev, i, slot, &next) && next.links[i].su_utility > best_utility) {
            best = slot;
            best_utility = next.links[i].su_utility;
          }
        }
        if (!best) continue;
        if (trace) {
          trace->propose(round, i, *best);
          trace->accept(round, i, *best);
        }
        m.assign(i, *best);
        ++stats.rounds;
        ++stats.proposal_msgs;
        ++stats.broadcast_msgs;
        ++round_proposals;
        entered = true;
      }
      if (!entered) break;
    }
    stats.max_price_round_proposals = std::max(stats.max_price_round_proposals, round_proposals);

    demand_and_supply(view, m, demand, supply);
    const PriceStep step = price_update(prices, demand, supply);
    if (trace) trace->price_update(round, step.prices, demand, supply, step.converged);
    if (step.converged) {
      stats.price_converged = true;
      break;
    }
    if (round >= prices.max_rounds) break;
    prices = step.prices;
  }

  view.realize(m);
  stats.stable = is_stable(view, m).stable;
  return RunResult{std::move(m), prices, stats};
}

}  // namespace cdna
