#include "cdna/market.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdna/error.hpp"

namespace cdna {

MarketPrices initial_prices(const Scenario& s) {
  MarketPrices p;
  p.pi_eur_gb.reserve(s.num_pus());
  for (const auto& pu : s.pus) p.pi_eur_gb.push_back(pu.ask_price_eur_gb);
  p.overage_price_eur_gb = s.market.overage_price_eur_gb;
  p.min_eur_gb = s.market.trade_price_min_eur_gb;
  p.max_eur_gb = s.market.trade_price_max_eur_gb;
  return p;
}

void validate(const MarketPrices& p) {
  if (!(p.min_eur_gb < p.max_eur_gb)) throw ConfigError("prices: min must be below max");
  if (!(p.eta > 0)) throw ConfigError("prices.eta: must be > 0");
  if (!(p.tolerance > 0)) throw ConfigError("prices.tolerance: must be > 0");
  if (p.max_rounds < 1) throw ConfigError("prices.max_rounds: must be >= 1");
  for (std::size_t j = 0; j < p.pi_eur_gb.size(); ++j) {
    if (p.pi_eur_gb[j] < p.min_eur_gb || p.pi_eur_gb[j] > p.max_eur_gb) {
      throw ConfigError("prices.pi_eur_gb[" + std::to_string(j) + "]: outside the trade price band");
    }
  }
}

double su_utility(double valuation_eur_gb, double pi_eur_gb, double q_mb) {
  if (q_mb == 0.0) return 0.0;
  return (valuation_eur_gb - pi_eur_gb) * q_mb / 1000.0;
}

double su_utility(const SecondaryUser& su, double pi_eur_gb, double q_mb, bool feasible) {
  if (!feasible) return kInfeasibleUtility;
  return su_utility(su.valuation_eur_gb, pi_eur_gb, q_mb);
}

double pu_margin_eur_gb(double pi_eur_gb, const MarketParams& market) {
  return pi_eur_gb - market.energy_cost_eur_gb();
}

double pu_utility(const PrimaryUser& pu, std::span<const Trade> assigned, double pi_eur_gb,
                  const MarketParams& market) {
  double volume = 0.0;
  for (const auto& t : assigned) volume += t.q_mb;
  if (volume > pu.quota_remaining_mb * (1.0 + 1e-12) + 1e-9) {
    throw ContractViolation("PU " + std::to_string(pu.id) + " trades " + std::to_string(volume) +
                            " MB over a quota of " + std::to_string(pu.quota_remaining_mb) + " MB");
  }
  return pu_margin_eur_gb(pi_eur_gb, market) * volume / 1000.0;
}

bool participates(const SecondaryUser& su) { return su.plan_exceeded || su.reward_eur > 0; }

const char* to_string(Choice choice) {
  switch (choice) {
    case Choice::Sbs: return "sbs";
    case Choice::Cdna: return "cdna";
    case Choice::Idle: return "idle";
  }
  return "?";
}

double sbs_utility(const SecondaryUser& su, double overage_price_eur_gb) {
  return (su.valuation_eur_gb - overage_price_eur_gb) * su.demand_mb / 1000.0;
}

bool sbs_available(const SecondaryUser& su, double overage_price_eur_gb, const MarketParams& market) {
  if (market.sbs_max_sinr_db && su.min_sinr_db > *market.sbs_max_sinr_db) return false;
  return su.valuation_eur_gb - overage_price_eur_gb > 0;
}

Choice sbs_or_cdna(const SecondaryUser& su, double best_cdna_utility, const MarketPrices& prices,
                   const MarketParams& market) {
  if (!su.plan_exceeded) {
    // Within plan the SBS costs nothing extra; only a congestion reward moves the SU.
    return su.reward_eur > 0 && best_cdna_utility > 0 ? Choice::Cdna : Choice::Sbs;
  }
  const bool sbs_ok = sbs_available(su, prices.overage_price_eur_gb, market);
  const double sbs = sbs_utility(su, prices.overage_price_eur_gb);
  if (best_cdna_utility > 0 && (!sbs_ok || best_cdna_utility > sbs)) return Choice::Cdna;
  return sbs_ok ? Choice::Sbs : Choice::Idle;
}

Revenue operator_revenue(const Matching& m, std::span<const Choice> choices, const MarketPrices& prices,
                         const Scenario& s) {
  Revenue r;
  double payments = 0.0;
  for (std::size_t i = 0; i < s.num_sus(); ++i) {
    if (choices[i] == Choice::Cdna && m.is_assigned(i)) payments += m.at(i)->pi_eur_gb * m.at(i)->q_mb / 1000.0;
    if (choices[i] == Choice::Sbs && s.sus[i].plan_exceeded) {
      r.sbs_eur += prices.overage_price_eur_gb * s.sus[i].demand_mb / 1000.0;
    }
  }
  r.cdna_eur = s.market.operator_share * payments;
  return r;
}

PriceStep price_update(const MarketPrices& prices, std::span<const double> demand_mb,
                       std::span<const double> supply_mb) {
  PriceStep step{prices, true, std::vector<bool>(prices.pi_eur_gb.size())};
  for (std::size_t j = 0; j < prices.pi_eur_gb.size(); ++j) {
    const double d = demand_mb[j];
    const double s = supply_mb[j];
    const double excess = (d - s) / std::max(s, 1.0);
    const double next =
        std::clamp(prices.pi_eur_gb[j] * (1.0 + prices.eta * excess), prices.min_eur_gb, prices.max_eur_gb);
    step.prices.pi_eur_gb[j] = next;
    const bool pinned = (next >= prices.max_eur_gb && d > s) || (next <= prices.min_eur_gb && d < s);
    step.pu_converged[j] = std::abs(excess) <= prices.tolerance || pinned;
    step.converged = step.converged && step.pu_converged[j];
  }
  return step;
}

}  // namespace cdna
