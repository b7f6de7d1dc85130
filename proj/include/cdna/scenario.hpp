#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cdna {

inline constexpr int kScenarioSchemaVersion = 1;

enum class SharingMode { Orthogonal, Concurrent };

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

double distance_m(const Position& a, const Position& b);

struct RadioParams {
  double tx_power_watts = 0.020;
  double noise_power_watts = 1e-7;  // total per channel
  double path_loss_exponent = 3.0;
  double channel_bandwidth_hz = 1e6;
  double snr_gap = 1.0;                      // rate = W log2(1 + sinr / gap)
  double primary_interference_watts = 0.0;   // added on Concurrent channels only
  std::optional<double> max_link_distance_m; // unlimited when empty
  friend bool operator==(const RadioParams&, const RadioParams&) = default;
};

struct MarketParams {
  double plan_volume_gb = 10.0;
  double plan_price_eur = 10.0;
  double trade_price_min_eur_gb = 0.1;
  double trade_price_max_eur_gb = 1.0;
  double overage_price_eur_gb = 1.0;
  double exceed_prob = 0.8;
  double energy_per_mb_joule = 0.257;
  double energy_price_eur_joule = 1e-4;
  double operator_share = 0.3;
  double snapshot_duration_s = 900.0;
  // Highest SINR requirement the congested secondary base station can still
  // serve. Exceeded-plan SUs above it cannot fall back to the SBS.
  std::optional<double> sbs_max_sinr_db = 10.0;
  friend bool operator==(const MarketParams&, const MarketParams&) = default;

  /// PU-side energy cost of forwarding one GB, in EUR.
  double energy_cost_eur_gb() const { return energy_per_mb_joule * 1000.0 * energy_price_eur_joule; }
};

struct PrimaryUser {
  std::size_t id = 0;
  Position position;
  double quota_remaining_mb = 0.0;
  double ask_price_eur_gb = 0.0;
  friend bool operator==(const PrimaryUser&, const PrimaryUser&) = default;
};

struct SecondaryUser {
  std::size_t id = 0;
  Position position;
  double demand_mb = 0.0;
  double min_sinr_db = 1.0;
  double duration_s = 0.0;
  double valuation_eur_gb = 0.0;
  bool plan_exceeded = false;
  double reward_eur = 0.0;  // SO congestion reward; 0 disables that branch
  friend bool operator==(const SecondaryUser&, const SecondaryUser&) = default;
};

struct Channel {
  std::size_t id = 0;
  SharingMode sharing_mode = SharingMode::Orthogonal;
  friend bool operator==(const Channel&, const Channel&) = default;
};

struct Scenario {
  std::uint64_t seed = 0;
  RadioParams radio;
  MarketParams market;
  double area_side_m = 150.0;
  std::vector<PrimaryUser> pus;
  std::vector<SecondaryUser> sus;
  std::vector<Channel> channels;
  friend bool operator==(const Scenario&, const Scenario&) = default;

  std::size_t num_pus() const { return pus.size(); }
  std::size_t num_sus() const { return sus.size(); }
  std::size_t num_channels() const { return channels.size(); }
};

/// Closed interval used by the generator. lo == hi means a point value.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct GenConfig {
  std::size_t num_pus = 10;
  std::size_t num_sus = 20;
  std::size_t num_channels = 5;
  std::uint64_t seed = 0;
  double area_side_m = 150.0;
  SharingMode sharing_mode = SharingMode::Orthogonal;
  RadioParams radio;
  MarketParams market;
  Range quota_mb{1000.0, 10000.0};
  std::optional<Range> ask_price_eur_gb;  // defaults to the trade price band
  Range demand_mb{100.0, 2000.0};
  Range min_sinr_db{1.0, 20.0};
  Range duration_s{0.0, 900.0};
  Range valuation_eur_gb{0.5, 1.5};
};

/// Throws ConfigError naming the offending field.
void validate(const GenConfig& config);

Scenario generate_scenario(const GenConfig& config);

/// Throws ParseError with the path of the first field that breaks an invariant.
void validate(const Scenario& scenario);

std::string to_json_string(const Scenario& scenario, int indent = 2);
Scenario scenario_from_json_string(const std::string& text);

void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the compact JSON form.
std::string scenario_hash(const Scenario& scenario);

/// Copy of `scenario` with every SU's SINR requirement and the link distance
/// limit overridden, as used by the transmission-range sweeps.
Scenario with_link_requirements(Scenario scenario, double max_link_distance_m, double min_sinr_db);

const char* to_string(SharingMode mode);

}  // namespace cdna
