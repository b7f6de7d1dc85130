// Command-line front end: scenario generation, single runs, sweeps and the
// brute-force oracle.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdna/baselines.hpp"
#include "cdna/error.hpp"
#include "cdna/experiments.hpp"
#include "cdna/market.hpp"
#include "cdna/matching.hpp"
#include "cdna/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitGuard = 3;

using Json = nlohmann::ordered_json;

Json matching_json(const cdna::Matching& m) {
  Json out = Json::array();
  for (std::size_t i = 0; i < m.num_sus(); ++i) {
    if (!m.is_assigned(i)) continue;
    const auto& a = *m.at(i);
    out.push_back({{"su", i}, {"pu", a.slot.pu}, {"channel", a.slot.channel}, {"q_mb", a.q_mb},
                   {"pi_eur_gb", a.pi_eur_gb}});
  }
  return out;
}

Json stats_json(const cdna::RunStats& st) {
  return {{"proposal_msgs", st.proposal_msgs},
          {"broadcast_msgs", st.broadcast_msgs},
          {"swap_count", st.swap_count},
          {"rounds", st.rounds},
          {"price_rounds", st.price_rounds},
          {"max_price_round_proposals", st.max_price_round_proposals},
          {"stable", st.stable},
          {"price_converged", st.price_converged}};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw cdna::ConfigError("cannot open " + path + " for writing");
  out << text;
}

cdna::SharingMode parse_sharing(const std::string& name) {
  if (name == "orthogonal") return cdna::SharingMode::Orthogonal;
  if (name == "concurrent") return cdna::SharingMode::Concurrent;
  throw cdna::ConfigError("sharing: expected orthogonal or concurrent, got '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data and spectrum trading simulator"};
  app.require_subcommand(1);

  cdna::GenConfig gen;
  std::string sharing = "orthogonal";
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a random scenario as JSON");
  generate->add_option("--seed", gen.seed);
  generate->add_option("--pus", gen.num_pus, "Number of primary users");
  generate->add_option("--sus", gen.num_sus, "Number of secondary users");
  generate->add_option("--channels", gen.num_channels);
  generate->add_option("--area", gen.area_side_m, "Side of the square area (m)");
  generate->add_option("--exceed-prob", gen.market.exceed_prob);
  generate->add_option("--overage-price", gen.market.overage_price_eur_gb, "SBS overage price (EUR/GB)");
  generate->add_option("--sharing", sharing, "orthogonal or concurrent");
  generate->add_option("--out", gen_out, "Output file (default stdout)");

  std::string run_scenario;
  std::string run_out;
  std::string trace_path;
  auto* run = app.add_subcommand("run", "Run the matching on one scenario");
  run->add_option("--scenario", run_scenario)->required();
  run->add_option("--out", run_out, "Output file (default stdout)");
  run->add_option("--trace", trace_path, "Write an NDJSON event log");

  std::string experiment;
  std::string sweep_out;
  std::string seeds = "0..29";
  std::string grid;
  std::size_t threads = 1;
  bool timing = false;
  auto* sweep = app.add_subcommand("sweep", "Run an experiment sweep and write tidy CSV");
  sweep->add_option("--experiment", experiment, "range, population, revenue or convergence")->required();
  sweep->add_option("--out", sweep_out, "CSV file")->required();
  sweep->add_option("--seeds", seeds, "Inclusive seed range A..B");
  sweep->add_option("--grid", grid, "Comma-separated grid values");
  sweep->add_option("--threads", threads);
  sweep->add_flag("--timing", timing, "Add wall-clock rows (not reproducible)");

  std::string oracle_scenario;
  std::string oracle_out;
  auto* oracle = app.add_subcommand("oracle", "Exhaustive welfare optimum of a small scenario");
  oracle->add_option("--scenario", oracle_scenario)->required();
  oracle->add_option("--out", oracle_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*generate) {
      gen.sharing_mode = parse_sharing(sharing);
      write_text(gen_out, cdna::to_json_string(cdna::generate_scenario(gen)) + "\n");
    } else if (*run) {
      const auto s = cdna::load_scenario(run_scenario);
      std::optional<std::ofstream> trace;
      cdna::RunOptions options;
      if (!trace_path.empty()) {
        trace.emplace(trace_path);
        if (!*trace) throw cdna::ConfigError("cannot open " + trace_path + " for writing");
        options.trace = &*trace;
      }
      const auto result = cdna::run_matching(s, cdna::initial_prices(s), options);
      Json out{{"scenario_hash", cdna::scenario_hash(s)},
               {"prices_eur_gb", result.prices.pi_eur_gb},
               {"matching", matching_json(result.matching)},
               {"welfare_eur", cdna::social_welfare(s, result.matching, result.prices)},
               {"avg_su_utility_eur", cdna::average_su_utility(s, result.matching, result.prices)},
               {"stats", stats_json(result.stats)}};
      write_text(run_out, out.dump(2) + "\n");
    } else if (*sweep) {
      auto spec = cdna::default_spec(cdna::parse_experiment(experiment));
      spec.seeds = cdna::parse_seed_range(seeds);
      if (!grid.empty()) spec.grid = cdna::parse_grid(grid);
      spec.threads = threads;
      spec.timing = timing;
      spec.output_path = sweep_out;
      const auto records = cdna::run_sweep(spec);
      std::ofstream out(sweep_out);
      if (!out) throw cdna::ConfigError("cannot open " + sweep_out + " for writing");
      cdna::write_csv(out, records);
    } else if (*oracle) {
      const auto s = cdna::load_scenario(oracle_scenario);
      const auto prices = cdna::initial_prices(s);
      const auto best = cdna::brute_force_optimal(s, prices);
      const auto proposed = cdna::run_matching(s, prices);
      Json out{{"scenario_hash", cdna::scenario_hash(s)},
               {"enumeration_size", cdna::enumeration_size(s)},
               {"optimal_welfare_eur", best.welfare_eur},
               {"optimal_matching", matching_json(best.matching)},
               {"proposed_welfare_eur", cdna::social_welfare(s, proposed.matching, proposed.prices)},
               {"proposed_welfare_at_initial_prices_eur", cdna::social_welfare(s, proposed.matching, prices)}};
      write_text(oracle_out, out.dump(2) + "\n");
    }
  } catch (const cdna::GuardError& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return kExitGuard;
  } catch (const cdna::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const cdna::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
