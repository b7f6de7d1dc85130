#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdna/scenario.hpp"

namespace cdna {

enum class Experiment { RangeUtility, PopulationSbs, Revenue, Convergence };

const char* to_string(Experiment experiment);
/// Accepts the CLI names range, population, revenue and convergence.
Experiment parse_experiment(const std::string& name);

struct SweepSpec {
  Experiment experiment = Experiment::RangeUtility;
  /// Link distance (m) for range and revenue sweeps; SU count otherwise.
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds;
  std::string output_path;
  /// Scenario template; the sweep overrides the seed and swept fields.
  GenConfig base;
  std::size_t threads = 1;
  /// Adds wall-clock rows to convergence sweeps (these differ run to run).
  bool timing = false;
};

/// Default grid and 30 seeds (0..29) for an experiment.
SweepSpec default_spec(Experiment experiment);

/// Throws ConfigError if the grid or seed list is empty.
void validate(const SweepSpec& spec);

/// Parses "A..B" (inclusive) or a single seed.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);
/// Parses comma-separated numbers.
std::vector<double> parse_grid(const std::string& text);

/// Link distance and SINR requirement swept together, linear between
/// (20 m, 20 dB) and (200 m, 1 dB).
double range_min_sinr_db(double max_link_distance_m);

/// One tidy CSV row. Per-seed rows carry the seed; summary rows carry
/// seed "all" and an empty scenario hash.
struct Record {
  std::string experiment;
  std::string grid_param;
  double grid_value = 0.0;
  std::string variant;
  std::string seed;
  std::string method;
  std::string metric;
  double value = 0.0;
  std::string scenario_hash;
};

std::vector<Record> sweep_range_utility(const SweepSpec& spec);
std::vector<Record> sweep_population_sbs(const SweepSpec& spec);
std::vector<Record> sweep_revenue(const SweepSpec& spec);
std::vector<Record> sweep_convergence(const SweepSpec& spec);
/// Dispatches on spec.experiment; per-seed rows followed by summary rows.
std::vector<Record> run_sweep(const SweepSpec& spec);

/// Mean, 95% Student-t interval and median per (grid point, variant,
/// method, metric) across seeds.
std::vector<Record> summarize(std::span<const Record> per_seed);

void write_csv(std::ostream& out, std::span<const Record> records);
inline constexpr const char* kCsvHeader =
    "experiment,grid_param,grid_value,variant,seed,method,metric,value,build_id,scenario_hash";

/// Shortest round-trip decimal form.
std::string format_double(double value);

/// `git describe` of the source tree at configure time.
const char* build_id();

double mean(std::span<const double> xs);
double median(std::vector<double> xs);
/// Half-width of the two-sided 95% Student-t interval; 0 for fewer than two values.
double ci95_half_width(std::span<const double> xs);
/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Runs body(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace cdna
