#include "cdna/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "cdna/baselines.hpp"
#include "cdna/error.hpp"
#include "cdna/market.hpp"
#include "cdna/matching.hpp"

#ifndef CDNA_BUILD_ID
#define CDNA_BUILD_ID "unknown"
#endif

namespace cdna {

const char* build_id() { return CDNA_BUILD_ID; }

const char* to_string(Experiment experiment) {
  switch (experiment) {
    case Experiment::RangeUtility: return "range";
    case Experiment::PopulationSbs: return "population";
    case Experiment::Revenue: return "revenue";
    case Experiment::Convergence: return "convergence";
  }
  return "?";
}

Experiment parse_experiment(const std::string& name) {
  for (auto e : {Experiment::RangeUtility, Experiment::PopulationSbs, Experiment::Revenue, Experiment::Convergence}) {
    if (name == to_string(e)) return e;
  }
  throw ConfigError("experiment: unknown name '" + name + "'");
}

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / (n - 1);
  return out;
}

}  // namespace

SweepSpec default_spec(Experiment experiment) {
  SweepSpec spec;
  spec.experiment = experiment;
  switch (experiment) {
    case Experiment::RangeUtility:
    case Experiment::Revenue:
      spec.grid = linspace(20.0, 200.0, 10);
      break;
    case Experiment::PopulationSbs:
    case Experiment::Convergence:
      spec.grid = linspace(10.0, 100.0, 10);
      break;
  }
  for (std::uint64_t s = 0; s < 30; ++s) spec.seeds.push_back(s);
  return spec;
}

void validate(const SweepSpec& spec) {
  if (spec.grid.empty()) throw ConfigError("grid: must not be empty");
  if (spec.seeds.empty()) throw ConfigError("seeds: must not be empty");
  if (spec.threads == 0) throw ConfigError("threads: must be at least 1");
  if (spec.experiment == Experiment::PopulationSbs || spec.experiment == Experiment::Convergence) {
    for (double n : spec.grid) {
      if (n < 1 || n != std::floor(n)) throw ConfigError("grid: SU counts must be positive integers");
    }
  } else {
    for (double d : spec.grid) {
      if (!(d > 0)) throw ConfigError("grid: link distances must be positive");
    }
  }
  validate(spec.base);
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto parse = [&](std::string_view part) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty()) {
      throw ConfigError("seeds: expected A..B, got '" + text + "'");
    }
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) return {parse(text)};
  const std::uint64_t lo = parse(std::string_view(text).substr(0, dots));
  const std::uint64_t hi = parse(std::string_view(text).substr(dots + 2));
  if (hi < lo) throw ConfigError("seeds: range end precedes start in '" + text + "'");
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  return seeds;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    const std::string part = text.substr(start, comma - start);
    double v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      throw ConfigError("grid: cannot parse '" + part + "'");
    }
    grid.push_back(v);
    start = comma + 1;
  }
  return grid;
}

double range_min_sinr_db(double max_link_distance_m) {
  return 20.0 + (max_link_distance_m - 20.0) * (1.0 - 20.0) / (200.0 - 20.0);
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Statistics

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double ci95_half_width(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(static_cast<double>(n));
}

namespace {

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t end = k;
    while (end + 1 < idx.size() && xs[idx[end + 1]] == xs[idx[k]]) ++end;
    const double r = 0.5 * static_cast<double>(k + end) + 1.0;
    for (std::size_t t = k; t <= end; ++t) ranks[idx[t]] = r;
    k = end + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ConfigError("spearman: series lengths differ");
  if (xs.size() < 2) return 0.0;
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

struct Task {
  double grid_value = 0.0;
  std::string variant;
  std::uint64_t seed = 0;
  GenConfig config;
};

using TaskBody = std::function<std::vector<Record>(const Task&)>;

std::vector<Record> run_tasks(const SweepSpec& spec, const std::vector<Task>& tasks, const TaskBody& body) {
  std::vector<std::vector<Record>> out(tasks.size());
  parallel_for(tasks.size(), spec.threads, [&](std::size_t k) { out[k] = body(tasks[k]); });
  std::vector<Record> records;
  for (auto& part : out) records.insert(records.end(), part.begin(), part.end());
  return records;
}

class RowMaker {
 public:
  RowMaker(const char* experiment, const char* grid_param, const Task& task, std::string hash)
      : experiment_(experiment), grid_param_(grid_param), task_(task), hash_(std::move(hash)) {}

  void add(const char* method, const char* metric, double value) {
    rows_.push_back(Record{experiment_, grid_param_, task_.grid_value, task_.variant, std::to_string(task_.seed),
                           method, metric, value, hash_});
  }
  std::vector<Record> take() { return std::move(rows_); }

 private:
  const char* experiment_;
  const char* grid_param_;
  const Task& task_;
  std::string hash_;
  std::vector<Record> rows_;
};

std::vector<Task> grid_tasks(const SweepSpec& spec, const std::string& variant, const GenConfig& config) {
  std::vector<Task> tasks;
  for (double g : spec.grid) {
    for (std::uint64_t seed : spec.seeds) {
      Task t{g, variant, seed, config};
      t.config.seed = seed;
      tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

Scenario range_scenario(const Task& task) {
  const double d = task.grid_value;
  return with_link_requirements(generate_scenario(task.config), d, range_min_sinr_db(d));
}

Scenario population_scenario(const Task& task) {
  GenConfig config = task.config;
  config.num_sus = static_cast<std::size_t>(task.grid_value);
  return generate_scenario(config);
}

// Each SU's CDNA-vs-SBS decision given what the matching offers it.
std::vector<Choice> choices_for(const Scenario& s, const Matching& m, const MarketPrices& prices) {
  std::vector<Choice> choices(s.num_sus());
  for (std::size_t i = 0; i < s.num_sus(); ++i) {
    double offered = 0.0;
    if (m.is_assigned(i)) offered = su_utility(s.sus[i].valuation_eur_gb, m.at(i)->pi_eur_gb, m.at(i)->q_mb);
    choices[i] = sbs_or_cdna(s.sus[i], offered, prices, s.market);
  }
  return choices;
}

std::string variant_name(double e, double p) { return "e=" + format_double(e) + ";p=" + format_double(p); }

}  // namespace

std::vector<Record> sweep_range_utility(const SweepSpec& spec) {
  validate(spec);
  const auto tasks = grid_tasks(spec, "", spec.base);
  return run_tasks(spec, tasks, [](const Task& task) {
    const Scenario s = range_scenario(task);
    RowMaker rows("range", "max_link_distance_m", task, scenario_hash(s));
    const RunResult run = run_matching(s, initial_prices(s));
    const Matching random = random_matching(s, run.prices, task.seed);
    const WorstCase worst = worst_case_matching(s, run.prices);
    rows.add("proposed", "avg_su_utility_eur", average_su_utility(s, run.matching, run.prices));
    rows.add("random", "avg_su_utility_eur", average_su_utility(s, random, run.prices));
    rows.add("worst_case", "avg_su_utility_eur", average_su_utility(s, worst.matching, run.prices));
    rows.add("worst_case", "exact", worst.exact ? 1.0 : 0.0);
    rows.add("proposed", "min_sinr_db", range_min_sinr_db(task.grid_value));
    return rows.take();
  });
}

std::vector<Record> sweep_population_sbs(const SweepSpec& spec) {
  validate(spec);
  std::vector<Task> tasks;
  const double p0 = spec.base.market.overage_price_eur_gb;
  for (double e : {0.4, 0.8}) {
    for (double p : {p0, 2.0 * p0}) {
      GenConfig config = spec.base;
      config.market.exceed_prob = e;
      config.market.overage_price_eur_gb = p;
      auto part = grid_tasks(spec, variant_name(e, p), config);
      tasks.insert(tasks.end(), part.begin(), part.end());
    }
  }
  return run_tasks(spec, tasks, [](const Task& task) {
    const Scenario s = population_scenario(task);
    RowMaker rows("population", "num_sus", task, scenario_hash(s));
    const RunResult run = run_matching(s, initial_prices(s));
    const auto choices = choices_for(s, run.matching, run.prices);
    const auto count = [&](Choice c) { return static_cast<double>(std::count(choices.begin(), choices.end(), c)); };
    rows.add("proposed", "sbs_count", count(Choice::Sbs));
    rows.add("proposed", "cdna_count", count(Choice::Cdna));
    rows.add("proposed", "idle_count", count(Choice::Idle));
    return rows.take();
  });
}

std::vector<Record> sweep_revenue(const SweepSpec& spec) {
  validate(spec);
  GenConfig config = spec.base;
  config.market.exceed_prob = 0.8;
  const auto tasks = grid_tasks(spec, "e=0.8", config);
  return run_tasks(spec, tasks, [](const Task& task) {
    const Scenario s = range_scenario(task);
    RowMaker rows("revenue", "max_link_distance_m", task, scenario_hash(s));
    const RunResult run = run_matching(s, initial_prices(s));
    const auto choices = choices_for(s, run.matching, run.prices);
    // SUs that go elsewhere release their slots before anything is billed.
    Matching settled = run.matching;
    for (std::size_t i = 0; i < s.num_sus(); ++i)
      if (choices[i] != Choice::Cdna) settled.unassign(i);
    MarketView(s, run.prices).realize(settled);
    const Revenue revenue = operator_revenue(settled, choices, run.prices, s);
    rows.add("operator", "cdna_rev_eur", revenue.cdna_eur);
    rows.add("operator", "sbs_rev_eur", revenue.sbs_eur);
    if (revenue.sbs_eur > 0) rows.add("operator", "rev_ratio", revenue.cdna_eur / revenue.sbs_eur);
    return rows.take();
  });
}

std::vector<Record> sweep_convergence(const SweepSpec& spec) {
  validate(spec);
  const auto tasks = grid_tasks(spec, "", spec.base);
  const bool timing = spec.timing;
  return run_tasks(spec, tasks, [timing](const Task& task) {
    const Scenario s = population_scenario(task);
    RowMaker rows("convergence", "num_sus", task, scenario_hash(s));
    const auto start = std::chrono::steady_clock::now();
    const RunResult run = run_matching(s, initial_prices(s));
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    const RunStats& st = run.stats;
    rows.add("proposed", "rounds", static_cast<double>(st.rounds));
    rows.add("proposed", "swap_count", static_cast<double>(st.swap_count));
    rows.add("proposed", "proposal_msgs", static_cast<double>(st.proposal_msgs));
    rows.add("proposed", "broadcast_msgs", static_cast<double>(st.broadcast_msgs));
    rows.add("proposed", "price_rounds", static_cast<double>(st.price_rounds));
    rows.add("proposed", "max_price_round_proposals", static_cast<double>(st.max_price_round_proposals));
    rows.add("proposed", "price_converged", st.price_converged ? 1.0 : 0.0);
    rows.add("proposed", "stable", st.stable ? 1.0 : 0.0);
    if (timing) rows.add("proposed", "wall_clock_s", elapsed.count());
    return rows.take();
  });
}

std::vector<Record> summarize(std::span<const Record> per_seed) {
  using Key = std::tuple<std::string, std::string, double, std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : per_seed) {
    Key key{r.experiment, r.grid_param, r.grid_value, r.variant, r.method, r.metric};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.value);
  }
  std::vector<Record> out;
  for (const auto& key : order) {
    const auto& xs = groups.at(key);
    const auto& [experiment, grid_param, grid_value, variant, method, metric] = key;
    const double m = mean(xs);
    const double h = ci95_half_width(xs);
    auto add = [&](const std::string& suffix, double v) {
      out.push_back(Record{experiment, grid_param, grid_value, variant, "all", method, metric + suffix, v, ""});
    };
    add("_mean", m);
    add("_ci95_lo", m - h);
    add("_ci95_hi", m + h);
    add("_median", median(xs));
    add("_n", static_cast<double>(xs.size()));
  }
  return out;
}

std::vector<Record> run_sweep(const SweepSpec& spec) {
  std::vector<Record> records;
  switch (spec.experiment) {
    case Experiment::RangeUtility: records = sweep_range_utility(spec); break;
    case Experiment::PopulationSbs: records = sweep_population_sbs(spec); break;
    case Experiment::Revenue: records = sweep_revenue(spec); break;
    case Experiment::Convergence: records = sweep_convergence(spec); break;
  }
  auto summary = summarize(records);
  records.insert(records.end(), summary.begin(), summary.end());
  return records;
}

void write_csv(std::ostream& out, std::span<const Record> records) {
  out << kCsvHeader << '\n';
  const std::string build = build_id();
  for (const auto& r : records) {
    out << r.experiment << ',' << r.grid_param << ',' << format_double(r.grid_value) << ',' << r.variant << ','
        << r.seed << ',' << r.method << ',' << r.metric << ',' << format_double(r.value) << ',' << build << ','
        << r.scenario_hash << '\n';
  }
}

}  // namespace cdna
