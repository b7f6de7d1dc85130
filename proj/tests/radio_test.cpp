#include <gtest/gtest.h>

#include <cmath>

#include "cdna/error.hpp"
#include "cdna/radio.hpp"
#include "cdna/rng.hpp"
#include "support.hpp"

namespace cdna {
namespace {

using test::HandPu;
using test::HandSu;

TEST(PathGain, HandValues) {
  EXPECT_DOUBLE_EQ(path_gain(1.0, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(path_gain(10.0, 3.0), 1e-3);
  EXPECT_DOUBLE_EQ(path_gain(0.5, 3.0), 1.0);
}

TEST(PathGain, NonPositiveDistanceIsADomainError) {
  EXPECT_THROW(path_gain(0.0, 3.0), DomainError);
  EXPECT_THROW(path_gain(-2.0, 3.0), DomainError);
}

TEST(Sinr, SinglePairAtTenMetres) {
  const Scenario s = test::hand_scenario({HandPu{0, 0}}, {HandSu{10, 0}}, 1);
  Matching m(1);
  m.assign(0, {0, 0});
  // 0.02 W * 1e-3 / 1e-7 W
  EXPECT_NEAR(sinr(s, m, 0, {0, 0}), 200.0, 1e-9);
}

TEST(Sinr, OneInterfererAtHundredMetres) {
  const Scenario s = test::hand_scenario({HandPu{0, 0}, HandPu{200, 0}}, {HandSu{10, 0}, HandSu{0, 100}}, 1);
  Matching m(2);
  m.assign(0, {0, 0});
  m.assign(1, {1, 0});
  const double expected = 2e-5 / (1e-7 + 0.02 * 1e-6);
  EXPECT_NEAR(sinr(s, m, 0, {0, 0}), expected, 1e-9);
  EXPECT_NEAR(expected, 166.667, 1e-3);
}

TEST(Sinr, EmptyMatchingHasNoInterference) {
  const Scenario s = test::hand_scenario({HandPu{0, 0}}, {HandSu{20, 0}, HandSu{5, 5}}, 2);
  const Matching m(2);
  EXPECT_NEAR(sinr(s, m, 0, {0, 1}), 0.02 * std::pow(20.0, -3) / 1e-7, 1e-9);
}

TEST(Sinr, OtherChannelsDoNotInterfere) {
  const Scenario s = test::hand_scenario({HandPu{0, 0}}, {HandSu{10, 0}, HandSu{0, 3}}, 2);
  Matching m(2);
  m.assign(1, {0, 1});
  EXPECT_NEAR(sinr(s, m, 0, {0, 0}), 200.0, 1e-9);
}

TEST(Sinr, ConcurrentSharingAddsPrimaryFloor) {
  Scenario s = test::hand_scenario({HandPu{0, 0}}, {HandSu{10, 0}}, 1);
  s.channels[0].sharing_mode = SharingMode::Concurrent;
  s.radio.primary_interference_watts = 1e-7;
  EXPECT_NEAR(sinr(s, Matching(1), 0, {0, 0}), 100.0, 1e-9);
  s.channels[0].sharing_mode = SharingMode::Orthogonal;
  EXPECT_NEAR(sinr(s, Matching(1), 0, {0, 0}), 200.0, 1e-9);
}

TEST(Rate, HandValues) {
  const RadioParams r;
  EXPECT_EQ(rate_bps(0.0, r), 0.0);
  EXPECT_DOUBLE_EQ(rate_bps(3.0, r), 2e6);
  EXPECT_NEAR(rate_bps(200.0, r), 7.651e6, 1e3);
}

TEST(Rate, StrictlyIncreasing) {
  const RadioParams r;
  Rng rng(11);
  for (int k = 0; k < 1000; ++k) {
    const double a = rng.uniform(0, 1e4);
    const double b = a + rng.uniform(1e-6, 10);
    ASSERT_LT(rate_bps(a, r), rate_bps(b, r));
  }
}

TEST(Deliverable, HandValues) {
  EXPECT_DOUBLE_EQ(deliverable_mb(100, 2e6, 60, 900, 10000), 15.0);
  EXPECT_EQ(deliverable_mb(100, 2e6, 0, 900, 10000), 0.0);
  // rate * t = 500 MB
  EXPECT_DOUBLE_EQ(deliverable_mb(50, 8e6, 500, 900, 20), 20.0);
}

TEST(Deliverable, DurationCappedBySnapshot) {
  EXPECT_DOUBLE_EQ(deliverable_mb(1e6, 8e6, 2000, 900, 1e6), 900.0);
}

TEST(Deliverable, NeverNegative) { EXPECT_EQ(deliverable_mb(100, 1e6, 60, 900, -5), 0.0); }

TEST(Deliverable, MonotoneInEveryArgument) {
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const double d = rng.uniform(1, 2000), r = rng.uniform(0, 1e7), t = rng.uniform(0, 900),
                 f = rng.uniform(0, 3000);
    const double base = deliverable_mb(d, r, t, 900, f);
    ASSERT_LE(base, deliverable_mb(d + 10, r, t, 900, f));
    ASSERT_LE(base, deliverable_mb(d, r + 1e5, t, 900, f));
    ASSERT_LE(base, deliverable_mb(d, r, t + 5, 900, f));
    ASSERT_LE(base, deliverable_mb(d, r, t, 900, f + 10));
  }
}

TEST(Deliverable, CountsOtherSusCommittedVolume) {
  const Scenario s = test::hand_scenario({HandPu{0, 0, 500}}, {HandSu{10, 0, 1000}, HandSu{0, 10}}, 2);
  Matching m(2);
  m.assign(1, {0, 1});
  m.set_terms(1, 420, 0.5);
  EXPECT_DOUBLE_EQ(deliverable_mb(s, 0, 8e6, 0, m), 80.0);
}

TEST(LinkStats, FeasibilityFollowsThreshold) {
  HandSu su{10, 0};
  su.min_sinr_db = 23.0;  // 199.5 linear
  Scenario s = test::hand_scenario({HandPu{0, 0}}, {su}, 1);
  EXPECT_TRUE(link_stats(s, Matching(1), 0, {0, 0}).feasible);
  s.sus[0].min_sinr_db = 23.1;  // 204.2 linear
  EXPECT_FALSE(link_stats(s, Matching(1), 0, {0, 0}).feasible);
}

TEST(LinkStats, DistanceLimitMakesLinkInfeasible) {
  Scenario s = test::hand_scenario({HandPu{0, 0}}, {HandSu{10, 0}}, 1);
  s.radio.max_link_distance_m = 9.0;
  EXPECT_FALSE(link_stats(s, Matching(1), 0, {0, 0}).feasible);
}

// Property: adding a co-channel SU never raises anyone's SINR.
TEST(Sinr, AddingAnInterfererNeverHelps) {
  GenConfig c;
  c.num_pus = 4;
  c.num_sus = 8;
  c.num_channels = 2;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    c.seed = seed;
    const Scenario s = generate_scenario(c);
    Rng rng(seed);
    Matching m(s.num_sus());
    for (std::size_t i = 0; i < s.num_sus(); ++i) {
      if (rng.bernoulli(0.5)) m.assign(i, {rng.below(4), rng.below(2)});
    }
    const auto idle = m.unmatched();
    if (idle.empty()) continue;
    const std::size_t extra = idle[rng.below(idle.size())];
    Matching more = m;
    more.assign(extra, {rng.below(4), rng.below(2)});
    for (std::size_t i = 0; i < s.num_sus(); ++i) {
      if (i == extra || !m.is_assigned(i)) continue;
      ASSERT_LE(sinr(s, more, i, *m.slot(i)), sinr(s, m, i, *m.slot(i)));
    }
  }
}

TEST(LinkBudget, AgreesWithDirectComputation) {
  GenConfig c;
  c.seed = 4;
  const Scenario s = generate_scenario(c);
  const LinkBudget budget(s);
  for (std::size_t i = 0; i < s.num_sus(); ++i) {
    for (std::size_t j = 0; j < s.num_pus(); ++j) {
      const double d = distance_m(s.sus[i].position, s.pus[j].position);
      EXPECT_DOUBLE_EQ(budget.rx_power(i, j), 0.02 * std::pow(std::max(d, 1.0), -3.0));
    }
  }
}

}  // namespace
}  // namespace cdna
