#pragma once

#include <algorithm>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "cdna/assignment.hpp"
#include "cdna/market.hpp"
#include "cdna/radio.hpp"
#include "cdna/scenario.hpp"

namespace cdna {

/// Minimum welfare gain (EUR) for a swap to be approved.
inline constexpr double kWelfareEpsilon = 1e-9;
/// Slack for "weakly improves" comparisons of individual utilities (EUR).
inline constexpr double kUtilityTolerance = 1e-12;
/// Volumes at or below this are treated as no trade (MB).
inline constexpr double kMinTradeMb = 1e-9;

struct LinkOutcome {
  double sinr = 0.0;
  double rate_bps = 0.0;
  double request_mb = 0.0;  // min(demand, airtime volume), before the quota
  double q_mb = 0.0;
  double su_utility = 0.0;
  bool feasible = false;
};

struct Evaluation {
  std::vector<LinkOutcome> links;  // per SU; unassigned SUs hold zeros
  std::vector<double> pu_utility;  // per PU
  double su_total = 0.0;
  double pu_total = 0.0;
  // Every assignment is feasible under the matching's own interference,
  // trades a positive volume, and is individually rational on both sides.
  bool valid = true;

  double welfare() const { return su_total + pu_total; }
};

/// Evaluates matchings of one scenario at one set of prices.
///
/// Interference at PU j on channel c is the received power of every other SU
/// assigned to channel c. A PU fills its quota in its own preference order:
/// larger requested volume first, then lower SU id.
class MarketView {
 public:
  MarketView(const Scenario& scenario, MarketPrices prices);

  const Scenario& scenario() const { return *scenario_; }
  const MarketPrices& prices() const { return prices_; }
  const LinkBudget& budget() const { return budget_; }
  void set_prices(MarketPrices prices);

  bool participant(std::size_t su) const { return participant_[su]; }
  std::size_t num_slots() const { return scenario_->num_pus() * scenario_->num_channels(); }
  Slot slot_at(std::size_t index) const {
    return Slot{index / scenario_->num_channels(), index % scenario_->num_channels()};
  }

  Evaluation evaluate(const Matching& m) const;
  /// Writes traded volume and price into every assignment of `m`.
  void realize(Matching& m) const;

  /// SINR of `su` at `slot` given per-(channel, PU) received power sums that
  /// may include `su` itself; its own contribution is removed.
  double sinr_against(const std::vector<double>& channel_power, const Matching& m, std::size_t su,
                      Slot slot) const;
  /// channel_power[c * M + j] = total power received at PU j from SUs on channel c.
  std::vector<double> channel_power(const Matching& m) const;

  double request_mb(std::size_t su, double sinr) const;

  /// Whether unmatched `su` can join `slot`: the result stays valid, the SU
  /// gains positive utility and the PU's utility strictly rises. On success
  /// `after` (if given) receives the evaluation of the extended matching.
  bool can_enter(Matching& m, const Evaluation& before, std::size_t su, Slot slot,
                 Evaluation* after = nullptr) const;
  /// Whether the assignment of `su` to `slot` in the evaluated matching is
  /// feasible, trades a positive volume and is rational on both sides.
  bool link_valid(const Evaluation& ev, std::size_t su, Slot slot) const;

 private:
  const Scenario* scenario_;
  MarketPrices prices_;
  LinkBudget budget_;
  std::vector<char> participant_;
};

struct PreferenceEntry {
  std::size_t counterpart = 0;
  std::size_t channel = 0;
  double utility = 0.0;
};

/// Ranked by utility descending, ties by (counterpart, channel) ascending.
/// Only feasible entries with positive utility on both sides appear.
struct PreferenceList {
  std::size_t owner = 0;
  std::vector<PreferenceEntry> entries;
};

struct Preferences {
  std::vector<PreferenceList> su;  // entries name PUs
  std::vector<PreferenceList> pu;  // entries name SUs, across all channels
};

/// Preferences under the externalities of `m`. Each agent evaluates a
/// candidate with itself removed from the matching; the volume an SU expects
/// is capped by the quota the PU has not committed to others.
Preferences build_preferences(const MarketView& view, const Matching& m);
Preferences build_preferences(const Scenario& s, const Matching& m, const MarketPrices& prices);

struct RunStats {
  std::size_t proposal_msgs = 0;
  std::size_t broadcast_msgs = 0;
  std::size_t swap_count = 0;
  std::size_t rounds = 0;
  std::size_t price_rounds = 0;
  std::size_t max_price_round_proposals = 0;
  bool stable = false;
  bool price_converged = false;
};

enum class SwapKind { ChannelSwap, Relocation, Exchange };
const char* to_string(SwapKind kind);

struct SwapAction {
  SwapKind kind = SwapKind::ChannelSwap;
  std::size_t su = 0;
  std::optional<std::size_t> partner;  // Exchange only
  Slot from;
  Slot to;
  double welfare_gain = 0.0;
};

/// Newline-delimited JSON event log.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out) : out_(&out) {}
  void propose(std::size_t price_round, std::size_t su, Slot slot);
  void accept(std::size_t price_round, std::size_t su, Slot slot);
  void reject(std::size_t price_round, std::size_t su, Slot slot);
  void swap(std::size_t price_round, const SwapAction& action);
  void price_update(std::size_t price_round, const MarketPrices& next, std::span<const double> demand_mb,
                    std::span<const double> supply_mb, bool converged);

 private:
  std::ostream* out_;
};

/// Per-SU record of (PU, channel) pairs proposed to in the current phase.
class ProposalHistory {
 public:
  ProposalHistory(std::size_t num_sus, std::size_t num_slots)
      : num_slots_(num_slots), proposed_(num_sus * num_slots) {}
  bool contains(std::size_t su, std::size_t slot_index) const { return proposed_[su * num_slots_ + slot_index]; }
  void mark(std::size_t su, std::size_t slot_index) { proposed_[su * num_slots_ + slot_index] = 1; }
  void clear() { std::fill(proposed_.begin(), proposed_.end(), 0); }

 private:
  std::size_t num_slots_;
  std::vector<char> proposed_;
};

enum class Acceptance {
  Deferred,   // PUs re-rank held SUs together with new proposers
  EntryOnly,  // PUs keep held SUs and admit proposers into leftover room
};

struct RoundResult {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t broadcasts = 0;
};

/// One proposal round: every unmatched participant proposes to its best
/// (PU, channel) not yet proposed to. PUs then admit proposers (and, under
/// Deferred, re-admit the SUs they hold) while the matching stays valid and
/// their utility rises. Decisions of different PUs are settled in order of
/// the PU-side utility of the trade, larger first.
RoundResult propose_round(const MarketView& view, Matching& m, const Preferences& prefs, ProposalHistory& history,
                          Acceptance mode, TraceWriter* trace = nullptr, std::size_t price_round = 0);

/// First approved swap in scan order (SU id ascending; per SU: channel
/// swaps, relocations, then exchanges with higher-id SUs). Approval needs
/// every involved agent to weakly improve, one strictly, and welfare to rise
/// by at least kWelfareEpsilon. `m` must be valid.
std::optional<SwapAction> swap_search(const MarketView& view, const Matching& m);
std::optional<SwapAction> swap_search(const Scenario& s, const Matching& m, const MarketPrices& prices);

void apply(Matching& m, const SwapAction& action);

struct StabilityReport {
  bool stable = true;
  std::optional<SwapAction> blocking_swap;
  std::optional<std::size_t> blocking_su;  // unmatched SU with an open slot
  std::optional<Slot> blocking_slot;
};

StabilityReport is_stable(const MarketView& view, const Matching& m);
StabilityReport is_stable(const Scenario& s, const Matching& m, const MarketPrices& prices);

/// Per-PU demand (volume requested by SUs whose first choice it is, quota
/// ignored) and supply (the PU's quota) under `m`.
void demand_and_supply(const MarketView& view, const Matching& m, std::vector<double>& demand_mb,
                       std::vector<double>& supply_mb);

struct RunOptions {
  std::ostream* trace = nullptr;
};

struct RunResult {
  Matching matching;
  MarketPrices prices;
  RunStats stats;
};

/// Distributed matching with pricing. Each price round runs a deferred
/// acceptance proposal phase, then alternates swap phases with entry of any
/// unmatched SU that still finds an open slot, and finally adjusts prices by
/// excess demand. Returns the last matching, which is stable at the returned
/// prices, with trade terms realized.
RunResult run_matching(const Scenario& s, const MarketPrices& initial, const RunOptions& options = {});

}  // namespace cdna
