#pragma once

#include <cstddef>
#include <cstdint>

#include "cdna/assignment.hpp"
#include "cdna/market.hpp"
#include "cdna/scenario.hpp"

namespace cdna {

/// Exhaustive searches refuse instances with more candidate assignments.
inline constexpr double kEnumerationBound = 1e7;

/// (M*B + 1)^n for the n participating SUs (non-participants are never
/// matched, so they do not multiply the search space).
double enumeration_size(const Scenario& s);

/// Mean utility of the participating SUs (0 when nobody participates).
double average_su_utility(const Scenario& s, const Matching& m, const MarketPrices& prices);
double social_welfare(const Scenario& s, const Matching& m, const MarketPrices& prices);

/// Participants in seeded random order each take a uniformly drawn slot among
/// those they can still enter, or stay unmatched.
Matching random_matching(const Scenario& s, const MarketPrices& prices, std::uint64_t seed);

struct WorstCase {
  Matching matching;
  bool exact = false;  // false: greedy heuristic, instance above the bound
};

/// Lowest average SU utility over maximal valid matchings (no unmatched
/// participant can still enter). Falls back to a greedy heuristic in which
/// each SU takes its worst enterable slot.
WorstCase worst_case_matching(const Scenario& s, const MarketPrices& prices);

struct Optimum {
  Matching matching;
  double welfare_eur = 0.0;
};

/// Welfare maximizer over all valid matchings. Throws GuardError above
/// kEnumerationBound. Ties go to the lexicographically first assignment
/// (per SU: unmatched, then slots in (PU, channel) order).
Optimum brute_force_optimal(const Scenario& s, const MarketPrices& prices);

}  // namespace cdna
