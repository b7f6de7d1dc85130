#include "cdna/baselines.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "cdna/error.hpp"
#include "cdna/matching.hpp"
#include "cdna/rng.hpp"

namespace cdna {

namespace {

std::size_t count_participants(const Scenario& s) {
  std::size_t n = 0;
  for (const auto& su : s.sus) n += participates(su) ? 1 : 0;
  return n;
}

double average_su_utility(const Evaluation& ev, std::size_t participants) {
  return participants == 0 ? 0.0 : ev.su_total / static_cast<double>(participants);
}

void require_enumerable(const Scenario& s) {
  const double size = enumeration_size(s);
  if (size > kEnumerationBound) {
    throw GuardError("instance needs " + std::to_string(size) + " candidate assignments, above the bound of " +
                     std::to_string(kEnumerationBound));
  }
}

// Depth-first walk over all valid matchings. Invalid partial matchings are
// pruned: adding SUs only adds interference and quota pressure, so no
// extension of an invalid matching is valid.
void enumerate_valid(const MarketView& view, const std::function<void(const Matching&, const Evaluation&)>& visit) {
  const auto& s = view.scenario();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < s.num_sus(); ++i)
    if (view.participant(i)) order.push_back(i);
  Matching m(s.num_sus());
  std::function<void(std::size_t)> descend = [&](std::size_t depth) {
    if (depth == order.size()) {
      visit(m, view.evaluate(m));
      return;
    }
    const std::size_t su = order[depth];
    descend(depth + 1);
    for (std::size_t idx = 0; idx < view.num_slots(); ++idx) {
      const Slot slot = view.slot_at(idx);
      if (!view.budget().in_range(su, slot.pu)) continue;
      m.assign(su, slot);
      if (view.evaluate(m).valid) descend(depth + 1);
      m.unassign(su);
    }
  };
  descend(0);
}

bool is_maximal(const MarketView& view, const Matching& m, const Evaluation& ev) {
  Matching probe = m;
  for (std::size_t i = 0; i < m.num_sus(); ++i) {
    if (m.is_assigned(i) || !view.participant(i)) continue;
    for (std::size_t idx = 0; idx < view.num_slots(); ++idx) {
      if (view.can_enter(probe, ev, i, view.slot_at(idx))) return false;
    }
  }
  return true;
}

}  // namespace

double enumeration_size(const Scenario& s) {
  const double options = static_cast<double>(s.num_pus() * s.num_channels() + 1);
  return std::pow(options, static_cast<double>(count_participants(s)));
}

double average_su_utility(const Scenario& s, const Matching& m, const MarketPrices& prices) {
  return average_su_utility(MarketView(s, prices).evaluate(m), count_participants(s));
}

double social_welfare(const Scenario& s, const Matching& m, const MarketPrices& prices) {
  return MarketView(s, prices).evaluate(m).welfare();
}

Matching random_matching(const Scenario& s, const MarketPrices& prices, std::uint64_t seed) {
  const MarketView view(s, prices);
  Rng rng(seed);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < s.num_sus(); ++i)
    if (view.participant(i)) order.push_back(i);
  for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);

  Matching m(s.num_sus());
  Evaluation ev = view.evaluate(m);
  for (std::size_t su : order) {
    std::vector<Slot> open;
    for (std::size_t idx = 0; idx < view.num_slots(); ++idx) {
      const Slot slot = view.slot_at(idx);
      if (view.can_enter(m, ev, su, slot)) open.push_back(slot);
    }
    if (open.empty()) continue;
    m.assign(su, open[rng.below(open.size())]);
    ev = view.evaluate(m);
  }
  view.realize(m);
  return m;
}

WorstCase worst_case_matching(const Scenario& s, const MarketPrices& prices) {
  const MarketView view(s, prices);
  const std::size_t participants = count_participants(s);
  WorstCase result{Matching(s.num_sus()), false};

  if (enumeration_size(s) <= kEnumerationBound) {
    double worst = std::numeric_limits<double>::infinity();
    enumerate_valid(view, [&](const Matching& m, const Evaluation& ev) {
      const double avg = average_su_utility(ev, participants);
      if (avg < worst && is_maximal(view, m, ev)) {
        worst = avg;
        result.matching = m;
      }
    });
    result.exact = true;
  } else {
    Matching& m = result.matching;
    Evaluation ev = view.evaluate(m);
    Evaluation next;
    for (std::size_t su = 0; su < s.num_sus(); ++su) {
      if (!view.participant(su)) continue;
      std::optional<Slot> pick;
      Evaluation picked;
      for (std::size_t idx = 0; idx < view.num_slots(); ++idx) {
        const Slot slot = view.slot_at(idx);
        if (!view.can_enter(m, ev, su, slot, &next)) continue;
        if (!pick || next.links[su].su_utility < picked.links[su].su_utility) {
          pick = slot;
          picked = std::move(next);
        }
      }
      if (!pick) continue;
      m.assign(su, *pick);
      ev = std::move(picked);
    }
  }
  view.realize(result.matching);
  return result;
}

Optimum brute_force_optimal(const Scenario& s, const MarketPrices& prices) {
  require_enumerable(s);
  const MarketView view(s, prices);
  Optimum best{Matching(s.num_sus()), -std::numeric_limits<double>::infinity()};
  enumerate_valid(view, [&](const Matching& m, const Evaluation& ev) {
    if (ev.welfare() > best.welfare_eur) {
      best.welfare_eur = ev.welfare();
      best.matching = m;
    }
  });
  view.realize(best.matching);
  return best;
}

}  // namespace cdna
