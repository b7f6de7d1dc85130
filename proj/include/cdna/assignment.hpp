#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <vector>

namespace cdna {

/// A (PU, channel) pair an SU can be assigned to.
struct Slot {
  std::size_t pu = 0;
  std::size_t channel = 0;
  friend auto operator<=>(const Slot&, const Slot&) = default;
};

struct Assignment {
  Slot slot;
  double q_mb = 0.0;       // traded volume, filled by realize()
  double pi_eur_gb = 0.0;  // unit price at trade, filled by realize()
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Partial many-to-one assignment of SUs to (PU, channel) slots. Every SU is
/// either assigned or unmatched. Trade terms are derived from the slots; see
/// MarketView::realize.
class Matching {
 public:
  Matching() = default;
  explicit Matching(std::size_t num_sus) : assignments_(num_sus) {}

  std::size_t num_sus() const { return assignments_.size(); }
  bool is_assigned(std::size_t su) const { return assignments_[su].has_value(); }
  const std::optional<Assignment>& at(std::size_t su) const { return assignments_[su]; }
  std::optional<Slot> slot(std::size_t su) const {
    return assignments_[su] ? std::optional<Slot>(assignments_[su]->slot) : std::nullopt;
  }

  void assign(std::size_t su, Slot slot) { assignments_[su] = Assignment{slot, 0.0, 0.0}; }
  void unassign(std::size_t su) { assignments_[su].reset(); }
  void set_terms(std::size_t su, double q_mb, double pi_eur_gb) {
    assignments_[su]->q_mb = q_mb;
    assignments_[su]->pi_eur_gb = pi_eur_gb;
  }

  std::vector<std::size_t> unmatched() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments_.size(); ++i)
      if (!assignments_[i]) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> assigned_to(std::size_t pu) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments_.size(); ++i)
      if (assignments_[i] && assignments_[i]->slot.pu == pu) out.push_back(i);
    return out;
  }
  std::size_t num_assigned() const {
    std::size_t n = 0;
    for (const auto& a : assignments_) n += a.has_value();
    return n;
  }
  /// Slot-level equality, ignoring cached trade terms.
  bool same_slots(const Matching& other) const {
    if (other.num_sus() != num_sus()) return false;
    for (std::size_t i = 0; i < assignments_.size(); ++i)
      if (slot(i) != other.slot(i)) return false;
    return true;
  }

  friend bool operator==(const Matching&, const Matching&) = default;

 private:
  std::vector<std::optional<Assignment>> assignments_;
};

}  // namespace cdna
