#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "cdna/assignment.hpp"
#include "cdna/scenario.hpp"

namespace cdna {

/// Utility of an infeasible link. Such links never enter a preference list.
inline constexpr double kInfeasibleUtility = -std::numeric_limits<double>::infinity();

struct MarketPrices {
  std::vector<double> pi_eur_gb;  // per PU
  double overage_price_eur_gb = 1.0;
  double min_eur_gb = 0.1;
  double max_eur_gb = 1.0;
  double eta = 0.05;
  double tolerance = 0.1;
  std::size_t max_rounds = 200;
  friend bool operator==(const MarketPrices&, const MarketPrices&) = default;
};

/// Asking prices of the scenario's PUs plus its market bounds and overage price.
MarketPrices initial_prices(const Scenario& s);

/// Throws ConfigError when a price leaves the band or a step parameter is not positive.
void validate(const MarketPrices& prices);

/// (v - pi) * q / 1000.
double su_utility(double valuation_eur_gb, double pi_eur_gb, double q_mb);
/// Same, but kInfeasibleUtility when the link misses the SU's SINR requirement.
double su_utility(const SecondaryUser& su, double pi_eur_gb, double q_mb, bool feasible);

/// Net PU revenue per traded GB after the forwarding energy cost.
double pu_margin_eur_gb(double pi_eur_gb, const MarketParams& market);

struct Trade {
  std::size_t su = 0;
  double q_mb = 0.0;
};

/// Sum over trades of (pi - energy cost) * q / 1000. Throws ContractViolation
/// if the trades exceed the PU's quota.
double pu_utility(const PrimaryUser& pu, std::span<const Trade> assigned, double pi_eur_gb,
                  const MarketParams& market);

/// Whether an SU seeks CDNA access at all: it has run out of its plan, or the
/// SO pays it a congestion reward.
bool participates(const SecondaryUser& su);

enum class Choice { Sbs, Cdna, Idle };
const char* to_string(Choice choice);

double sbs_utility(const SecondaryUser& su, double overage_price_eur_gb);
bool sbs_available(const SecondaryUser& su, double overage_price_eur_gb, const MarketParams& market);

Choice sbs_or_cdna(const SecondaryUser& su, double best_cdna_utility, const MarketPrices& prices,
                   const MarketParams& market);

struct Revenue {
  double cdna_eur = 0.0;
  double sbs_eur = 0.0;
};

/// Operator share of CDNA payments by CDNA choosers and overage fees from
/// exceeded-plan SUs that stay on the SBS. Trade terms come from `m`.
Revenue operator_revenue(const Matching& m, std::span<const Choice> choices, const MarketPrices& prices,
                         const Scenario& s);

struct PriceStep {
  MarketPrices prices;
  bool converged = false;
  std::vector<bool> pu_converged;
};

/// One tatonnement step: pi' = clamp(pi * (1 + eta * (D - S) / max(S, 1 MB))).
/// A PU counts as converged when its relative excess demand is within the
/// tolerance, or when its price sits on the bound its excess pushes towards.
PriceStep price_update(const MarketPrices& prices, std::span<const double> demand_mb,
                       std::span<const double> supply_mb);

}  // namespace cdna
