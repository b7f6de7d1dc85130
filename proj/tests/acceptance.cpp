// Acceptance checks for the simulator's headline claims. Prints one
// PASS/FAIL line per criterion and exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cdna/baselines.hpp"
#include "cdna/experiments.hpp"
#include "cdna/market.hpp"
#include "cdna/matching.hpp"
#include "cdna/rng.hpp"
#include "support.hpp"

using namespace cdna;

namespace {

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(double v, int digits = 3) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Per-seed values of one (grid value, variant, method, metric) cell.
std::vector<double> cell(const std::vector<Record>& rows, double grid, const std::string& variant,
                         const std::string& method, const std::string& metric) {
  std::vector<double> xs;
  for (const auto& r : rows)
    if (r.seed != "all" && r.grid_value == grid && r.variant == variant && r.method == method && r.metric == metric)
      xs.push_back(r.value);
  return xs;
}

double cell_mean(const std::vector<Record>& rows, double grid, const std::string& variant, const std::string& method,
                 const std::string& metric) {
  return mean(cell(rows, grid, variant, method, metric));
}

SweepSpec spec_for(Experiment e) {
  SweepSpec spec = default_spec(e);
  spec.threads = 1;
  return spec;
}

// ---------------------------------------------------------------------------

void stability_and_pricing() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t certified = 0, converged = 0, within_rounds = 0;
  std::size_t max_rounds_seen = 0;
  const std::size_t seeds = 100;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    GenConfig c;  // M=10, N=20, B=5
    c.seed = seed;
    const Scenario s = generate_scenario(c);
    const MarketPrices start = initial_prices(s);
    const RunResult r = run_matching(s, start);
    certified += is_stable(s, r.matching, r.prices).stable;
    converged += r.stats.price_converged;
    within_rounds += r.stats.price_rounds <= start.max_rounds;
    max_rounds_seen = std::max(max_rounds_seen, r.stats.price_rounds);
  }
  const double elapsed = seconds_since(t0);
  report(certified == seeds && elapsed < 300, "stability",
         std::to_string(certified) + "/" + std::to_string(seeds) + " certified stable in " + fmt(elapsed, 1) +
             " s (need 100/100, < 300 s)");

  // Randomized monotonicity of one tatonnement step in the PU's own excess demand.
  Rng rng(2024);
  std::size_t violations = 0;
  const std::size_t samples = 10000;
  for (std::size_t k = 0; k < samples; ++k) {
    MarketPrices p;
    const std::size_t m = 1 + rng.below(5);
    for (std::size_t j = 0; j < m; ++j) p.pi_eur_gb.push_back(rng.uniform(p.min_eur_gb, p.max_eur_gb));
    std::vector<double> demand(m), supply(m);
    for (std::size_t j = 0; j < m; ++j) {
      demand[j] = rng.uniform(0, 5000);
      supply[j] = rng.uniform(0, 5000);
    }
    const std::size_t j = rng.below(m);
    const auto low = price_update(p, demand, supply);
    demand[j] += rng.uniform(0, 2000);
    const auto high = price_update(p, demand, supply);
    violations += high.prices.pi_eur_gb[j] < low.prices.pi_eur_gb[j];
  }
  const double rate = static_cast<double>(converged) / static_cast<double>(seeds);
  report(within_rounds == seeds && rate >= 0.9 && violations == 0, "pricing",
         "converged on " + std::to_string(converged) + "/" + std::to_string(seeds) + ", max price rounds " +
             std::to_string(max_rounds_seen) + " (limit 200), monotonicity violations " +
             std::to_string(violations) + "/" + std::to_string(samples) + " (need >= 90%, 0 violations)");
}

void oracle_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t above_opt = 0, beats_random = 0, worst_violations = 0, inexact = 0;
  const std::size_t instances = 50;
  for (std::uint64_t seed = 0; seed < instances; ++seed) {
    GenConfig c;
    c.num_pus = 3;
    c.num_sus = 5;
    c.num_channels = 2;
    c.area_side_m = 150.0 * std::sqrt(8.0 / 30.0);  // same SU density as the default scenario
    c.market.exceed_prob = 1.0;
    c.seed = seed;
    const Scenario s = generate_scenario(c);
    const RunResult run = run_matching(s, initial_prices(s));
    const MarketPrices& prices = run.prices;
    const Optimum opt = brute_force_optimal(s, prices);
    const Matching random = random_matching(s, prices, seed);
    const WorstCase worst = worst_case_matching(s, prices);

    const double w = social_welfare(s, run.matching, prices);
    above_opt += w > opt.welfare_eur;
    beats_random += w >= social_welfare(s, random, prices);
    inexact += !worst.exact;
    const double wa = average_su_utility(s, worst.matching, prices);
    for (const Matching* other : {&run.matching, &random, &opt.matching})
      worst_violations += wa > average_su_utility(s, *other, prices);
  }
  const double elapsed = seconds_since(t0);
  const double rate = static_cast<double>(beats_random) / static_cast<double>(instances);
  report(above_opt == 0 && rate >= 0.9 && worst_violations == 0 && inexact == 0 && elapsed < 120, "oracle",
         "proposed > optimum on " + std::to_string(above_opt) + ", proposed >= random on " +
             std::to_string(beats_random) + "/" + std::to_string(instances) + ", worst-case violations " +
             std::to_string(worst_violations) + ", " + fmt(elapsed, 1) + " s (need 0, >= 90%, 0, < 120 s)");
}

void range_utility() {
  const SweepSpec spec = spec_for(Experiment::RangeUtility);
  const auto rows = run_sweep(spec);
  const double end = spec.grid.back();
  const double proposed = cell_mean(rows, end, "", "proposed", "avg_su_utility_eur");
  const double random = cell_mean(rows, end, "", "random", "avg_su_utility_eur");
  const double worst = cell_mean(rows, end, "", "worst_case", "avg_su_utility_eur");
  const double vs_random = proposed / random - 1;
  const double vs_worst = proposed / worst - 1;
  std::vector<double> gaps;
  for (double d : spec.grid)
    gaps.push_back(cell_mean(rows, d, "", "proposed", "avg_su_utility_eur") -
                   cell_mean(rows, d, "", "random", "avg_su_utility_eur"));
  const double rho = spearman(spec.grid, gaps);
  report(vs_random >= 0.10 && vs_worst >= 0.30 && rho > 0, "range-utility",
         "at " + fmt(end, 0) + " m proposed " + fmt(proposed, 4) + " EUR vs random " + fmt(random, 4) + " (+" +
             fmt(100 * vs_random, 1) + "%), vs worst " + fmt(worst, 4) + " (+" + fmt(100 * vs_worst, 1) +
             "%), gap trend rho " + fmt(rho, 3) + " (need >= 10%, >= 30%, rho > 0)");
}

void population_sbs() {
  const SweepSpec spec = spec_for(Experiment::PopulationSbs);
  const auto rows = run_sweep(spec);
  const double p0 = spec.base.market.overage_price_eur_gb;
  auto variant = [](double e, double p) {
    return "e=" + format_double(e) + ";p=" + format_double(p);
  };
  const double base = cell_mean(rows, 20, variant(0.8, p0), "proposed", "sbs_count");
  const double doubled = cell_mean(rows, 20, variant(0.8, 2 * p0), "proposed", "sbs_count");
  const double drop = base > 0 ? 1 - doubled / base : 0;
  std::size_t pointwise = 0, points = 0;
  for (double n : spec.grid) {
    for (double p : {p0, 2 * p0}) {
      ++points;
      pointwise += cell_mean(rows, n, variant(0.8, p), "proposed", "sbs_count") <=
                   cell_mean(rows, n, variant(0.4, p), "proposed", "sbs_count");
    }
  }
  report(drop >= 0.15 && pointwise == points, "population-sbs",
         "N=20 e=0.8 mean SBS count " + fmt(base, 2) + " -> " + fmt(doubled, 2) + " when p doubles (-" +
             fmt(100 * drop, 1) + "%), higher e not above lower e at " + std::to_string(pointwise) + "/" +
             std::to_string(points) + " grid points (need >= 15%, all)");
}

void revenue() {
  const SweepSpec spec = spec_for(Experiment::Revenue);
  const auto rows = run_sweep(spec);
  const double low = spec.grid.front();
  const double cdna = cell_mean(rows, low, "e=0.8", "operator", "cdna_rev_eur");
  const double sbs = cell_mean(rows, low, "e=0.8", "operator", "sbs_rev_eur");
  const double ratio = sbs > 0 ? cdna / sbs : std::numeric_limits<double>::infinity();
  report(cdna > sbs, "revenue",
         "at " + fmt(low, 0) + " m (e=0.8) mean CDNA revenue " + fmt(cdna, 4) + " EUR vs SBS " + fmt(sbs, 4) +
             " EUR, ratio " + fmt(ratio, 2) + " (need CDNA > SBS)");
}

void convergence() {
  const SweepSpec spec = spec_for(Experiment::Convergence);
  const auto rows = run_sweep(spec);
  double worst_small = 0;
  for (double n : spec.grid)
    if (n <= 50) worst_small = std::max(worst_small, median(cell(rows, n, "", "proposed", "swap_count")));
  const double at50 = median(cell(rows, 50, "", "proposed", "swap_count"));
  const double at100 = median(cell(rows, 100, "", "proposed", "swap_count"));
  const bool flat = at100 <= 1.25 * at50;
  report(worst_small <= 50 && flat, "convergence",
         "largest median swap count for N <= 50 is " + fmt(worst_small, 1) + ", N=50 " + fmt(at50, 1) +
             ", N=100 " + fmt(at100, 1) + " (need <= 50, N=100 <= 1.25 x N=50)");
}

void message_bound() {
  bool ok = true;
  std::ostringstream detail;
  for (auto [n, m, b] : {std::tuple{10, 5, 2}, std::tuple{20, 10, 5}, std::tuple{40, 10, 5}}) {
    const Scenario s = test::identical_preference_scenario(n, m, b);
    const RunResult r = run_matching(s, initial_prices(s));
    const std::size_t bound = static_cast<std::size_t>(n * m * b);
    ok = ok && r.stats.proposal_msgs <= bound;
    detail << "(" << n << "," << m << "," << b << ") " << r.stats.proposal_msgs << "/" << bound << " ";
  }
  report(ok, "message-bound", detail.str() + "(need proposals <= N*M*B)");
}

void determinism() {
  bool ok = true;
  for (Experiment e : {Experiment::RangeUtility, Experiment::PopulationSbs, Experiment::Revenue,
                       Experiment::Convergence}) {
    SweepSpec spec = spec_for(e);
    spec.grid = {spec.grid.front(), spec.grid.back()};
    spec.seeds = {0, 1, 2, 3};
    auto csv = [&] {
      std::ostringstream out;
      const auto rows = run_sweep(spec);
      write_csv(out, rows);
      return out.str();
    };
    ok = ok && csv() == csv();
  }
  report(ok, "determinism", ok ? "repeated sweeps produced identical CSV bytes" : "CSV output differed between runs");
}

}  // namespace

int main() {
  stability_and_pricing();
  oracle_suite();
  range_utility();
  population_sbs();
  revenue();
  convergence();
  message_bound();
  determinism();
  std::printf("%s\n", failures == 0 ? "all criteria passed" : (std::to_string(failures) + " criteria failed").c_str());
  return failures == 0 ? 0 : 1;
}
