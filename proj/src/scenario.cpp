#include "cdna/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cdna/error.hpp"
#include "cdna/rng.hpp"

namespace cdna {

using Json = nlohmann::ordered_json;

double distance_m(const Position& a, const Position& b) { return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m); }

const char* to_string(SharingMode mode) {
  return mode == SharingMode::Orthogonal ? "orthogonal" : "concurrent";
}

namespace {

void check_range(const Range& r, const char* field) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw ConfigError(std::string(field) + ": range bounds must be finite");
  }
  if (r.lo > r.hi) {
    throw ConfigError(std::string(field) + ": min " + std::to_string(r.lo) + " exceeds max " +
                      std::to_string(r.hi));
  }
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ParseError(path, what);
}

void validate_radio(const RadioParams& r, const std::string& p) {
  require(r.tx_power_watts > 0, p + ".tx_power_watts", "must be > 0");
  require(r.noise_power_watts > 0, p + ".noise_power_watts", "must be > 0");
  require(r.path_loss_exponent >= 2, p + ".path_loss_exponent", "must be >= 2");
  require(r.channel_bandwidth_hz > 0, p + ".channel_bandwidth_hz", "must be > 0");
  require(r.snr_gap > 0, p + ".snr_gap", "must be > 0");
  require(r.primary_interference_watts >= 0, p + ".primary_interference_watts", "must be >= 0");
  require(!r.max_link_distance_m || *r.max_link_distance_m > 0, p + ".max_link_distance_m",
          "must be > 0 when set");
}

void validate_market(const MarketParams& m, const std::string& p) {
  require(m.exceed_prob >= 0 && m.exceed_prob <= 1, p + ".exceed_prob", "must lie in [0, 1]");
  require(m.trade_price_min_eur_gb >= 0, p + ".trade_price_min_eur_gb", "must be >= 0");
  require(m.trade_price_min_eur_gb < m.trade_price_max_eur_gb, p + ".trade_price_max_eur_gb",
          "must exceed trade_price_min_eur_gb");
  require(m.plan_volume_gb >= 0, p + ".plan_volume_gb", "must be >= 0");
  require(m.plan_price_eur >= 0, p + ".plan_price_eur", "must be >= 0");
  require(m.overage_price_eur_gb >= 0, p + ".overage_price_eur_gb", "must be >= 0");
  require(m.energy_per_mb_joule >= 0, p + ".energy_per_mb_joule", "must be >= 0");
  require(m.energy_price_eur_joule >= 0, p + ".energy_price_eur_joule", "must be >= 0");
  require(m.operator_share >= 0 && m.operator_share <= 1, p + ".operator_share", "must lie in [0, 1]");
  require(m.snapshot_duration_s > 0, p + ".snapshot_duration_s", "must be > 0");
}

bool in_area(const Position& pos, double side) {
  return pos.x_m >= 0 && pos.x_m <= side && pos.y_m >= 0 && pos.y_m <= side;
}

}  // namespace

void validate(const GenConfig& c) {
  if (c.num_pus < 1) throw ConfigError("num_pus: must be >= 1");
  if (c.num_sus < 1) throw ConfigError("num_sus: must be >= 1");
  if (c.num_channels < 1) throw ConfigError("num_channels: must be >= 1");
  if (!(c.area_side_m > 0)) throw ConfigError("area_side_m: must be > 0");
  check_range(c.quota_mb, "quota_mb");
  check_range(c.demand_mb, "demand_mb");
  check_range(c.min_sinr_db, "min_sinr_db");
  check_range(c.duration_s, "duration_s");
  check_range(c.valuation_eur_gb, "valuation_eur_gb");
  if (c.ask_price_eur_gb) check_range(*c.ask_price_eur_gb, "ask_price_eur_gb");
  if (c.quota_mb.lo < 0) throw ConfigError("quota_mb: must be >= 0");
  if (c.demand_mb.lo <= 0) throw ConfigError("demand_mb: must be > 0");
  if (c.min_sinr_db.lo < 1 || c.min_sinr_db.hi > 20) throw ConfigError("min_sinr_db: must lie in [1, 20] dB");
  if (c.duration_s.lo < 0 || c.duration_s.hi > c.market.snapshot_duration_s) {
    throw ConfigError("duration_s: must lie in [0, snapshot_duration_s]");
  }
  if (c.valuation_eur_gb.lo < 0) throw ConfigError("valuation_eur_gb: must be >= 0");
  const Range ask = c.ask_price_eur_gb.value_or(
      Range{c.market.trade_price_min_eur_gb, c.market.trade_price_max_eur_gb});
  if (ask.lo < c.market.trade_price_min_eur_gb || ask.hi > c.market.trade_price_max_eur_gb) {
    throw ConfigError("ask_price_eur_gb: must lie within the trade price band");
  }
  try {
    validate_radio(c.radio, "radio");
    validate_market(c.market, "market");
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

Scenario generate_scenario(const GenConfig& c) {
  validate(c);
  Rng rng(c.seed);
  Scenario s;
  s.seed = c.seed;
  s.radio = c.radio;
  s.market = c.market;
  s.area_side_m = c.area_side_m;
  const Range ask = c.ask_price_eur_gb.value_or(
      Range{c.market.trade_price_min_eur_gb, c.market.trade_price_max_eur_gb});

  s.pus.reserve(c.num_pus);
  for (std::size_t j = 0; j < c.num_pus; ++j) {
    PrimaryUser pu;
    pu.id = j;
    pu.position.x_m = rng.uniform(0.0, c.area_side_m);
    pu.position.y_m = rng.uniform(0.0, c.area_side_m);
    pu.quota_remaining_mb = rng.uniform(c.quota_mb.lo, c.quota_mb.hi);
    pu.ask_price_eur_gb = rng.uniform(ask.lo, ask.hi);
    s.pus.push_back(pu);
  }
  s.sus.reserve(c.num_sus);
  for (std::size_t i = 0; i < c.num_sus; ++i) {
    SecondaryUser su;
    su.id = i;
    su.position.x_m = rng.uniform(0.0, c.area_side_m);
    su.position.y_m = rng.uniform(0.0, c.area_side_m);
    su.demand_mb = rng.uniform(c.demand_mb.lo, c.demand_mb.hi);
    su.min_sinr_db = rng.uniform(c.min_sinr_db.lo, c.min_sinr_db.hi);
    su.duration_s = rng.uniform(c.duration_s.lo, c.duration_s.hi);
    su.valuation_eur_gb = rng.uniform(c.valuation_eur_gb.lo, c.valuation_eur_gb.hi);
    // One uniform per SU regardless of e, so raising e only adds exceeded SUs.
    su.plan_exceeded = rng.unit() < c.market.exceed_prob;
    s.sus.push_back(su);
  }
  s.channels.reserve(c.num_channels);
  for (std::size_t b = 0; b < c.num_channels; ++b) s.channels.push_back(Channel{b, c.sharing_mode});
  return s;
}

void validate(const Scenario& s) {
  validate_radio(s.radio, "radio");
  validate_market(s.market, "market");
  require(s.area_side_m > 0, "area_side_m", "must be > 0");
  require(!s.pus.empty(), "pus", "at least one PU required");
  require(!s.sus.empty(), "sus", "at least one SU required");
  require(!s.channels.empty(), "channels", "at least one channel required");
  for (std::size_t j = 0; j < s.pus.size(); ++j) {
    const auto& pu = s.pus[j];
    const std::string p = "pus[" + std::to_string(j) + "]";
    require(pu.id == j, p + ".id", "ids must equal list position");
    require(in_area(pu.position, s.area_side_m), p + ".position", "outside the deployment area");
    require(pu.quota_remaining_mb >= 0, p + ".quota_remaining_mb", "must be >= 0");
    require(pu.ask_price_eur_gb >= s.market.trade_price_min_eur_gb &&
                pu.ask_price_eur_gb <= s.market.trade_price_max_eur_gb,
            p + ".ask_price_eur_gb", "outside the trade price band");
  }
  for (std::size_t i = 0; i < s.sus.size(); ++i) {
    const auto& su = s.sus[i];
    const std::string p = "sus[" + std::to_string(i) + "]";
    require(su.id == i, p + ".id", "ids must equal list position");
    require(in_area(su.position, s.area_side_m), p + ".position", "outside the deployment area");
    require(su.demand_mb > 0, p + ".demand_mb", "must be > 0");
    require(su.min_sinr_db >= 1 && su.min_sinr_db <= 20, p + ".min_sinr_db", "must lie in [1, 20] dB");
    require(su.duration_s >= 0 && su.duration_s <= s.market.snapshot_duration_s, p + ".duration_s",
            "must lie in [0, snapshot_duration_s]");
    require(su.valuation_eur_gb >= 0, p + ".valuation_eur_gb", "must be >= 0");
    require(su.reward_eur >= 0, p + ".reward_eur", "must be >= 0");
  }
  for (std::size_t b = 0; b < s.channels.size(); ++b) {
    const std::string p = "channels[" + std::to_string(b) + "]";
    require(s.channels[b].id == b, p + ".id", "ids must equal list position");
    require(s.channels[b].sharing_mode == s.channels[0].sharing_mode, p + ".sharing_mode",
            "sharing mode must be uniform across channels");
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Json position_json(const Position& p) { return Json{{"x_m", p.x_m}, {"y_m", p.y_m}}; }

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json to_json(const Scenario& s) {
  Json j;
  j["version"] = kScenarioSchemaVersion;
  j["seed"] = s.seed;
  j["radio"] = Json{{"tx_power_watts", s.radio.tx_power_watts},
                    {"noise_power_watts", s.radio.noise_power_watts},
                    {"path_loss_exponent", s.radio.path_loss_exponent},
                    {"channel_bandwidth_hz", s.radio.channel_bandwidth_hz},
                    {"snr_gap", s.radio.snr_gap},
                    {"primary_interference_watts", s.radio.primary_interference_watts},
                    {"max_link_distance_m", optional_json(s.radio.max_link_distance_m)}};
  const auto& m = s.market;
  j["market"] = Json{{"plan_volume_gb", m.plan_volume_gb},
                     {"plan_price_eur", m.plan_price_eur},
                     {"trade_price_min_eur_gb", m.trade_price_min_eur_gb},
                     {"trade_price_max_eur_gb", m.trade_price_max_eur_gb},
                     {"overage_price_eur_gb", m.overage_price_eur_gb},
                     {"exceed_prob", m.exceed_prob},
                     {"energy_per_mb_joule", m.energy_per_mb_joule},
                     {"energy_price_eur_joule", m.energy_price_eur_joule},
                     {"operator_share", m.operator_share},
                     {"snapshot_duration_s", m.snapshot_duration_s},
                     {"sbs_max_sinr_db", optional_json(m.sbs_max_sinr_db)}};
  j["area_side_m"] = s.area_side_m;
  Json pus = Json::array();
  for (const auto& pu : s.pus) {
    pus.push_back(Json{{"id", pu.id},
                       {"position", position_json(pu.position)},
                       {"quota_remaining_mb", pu.quota_remaining_mb},
                       {"ask_price_eur_gb", pu.ask_price_eur_gb}});
  }
  j["pus"] = std::move(pus);
  Json sus = Json::array();
  for (const auto& su : s.sus) {
    sus.push_back(Json{{"id", su.id},
                       {"position", position_json(su.position)},
                       {"demand_mb", su.demand_mb},
                       {"min_sinr_db", su.min_sinr_db},
                       {"duration_s", su.duration_s},
                       {"valuation_eur_gb", su.valuation_eur_gb},
                       {"plan_exceeded", su.plan_exceeded},
                       {"reward_eur", su.reward_eur}});
  }
  j["sus"] = std::move(sus);
  Json channels = Json::array();
  for (const auto& ch : s.channels) {
    channels.push_back(Json{{"id", ch.id}, {"sharing_mode", to_string(ch.sharing_mode)}});
  }
  j["channels"] = std::move(channels);
  return j;
}

// Strict accessors: every key is required and typed; failures carry the path.
const Json& field(const Json& obj, const std::string& key, const std::string& path) {
  require(obj.is_object(), path, "expected an object");
  auto it = obj.find(key);
  require(it != obj.end(), path.empty() ? key : path + "." + key, "missing required field");
  return *it;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double number(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = field(obj, key, path);
  require(v.is_number(), join(path, key), "expected a number");
  return v.get<double>();
}

std::optional<double> optional_number(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = field(obj, key, path);
  if (v.is_null()) return std::nullopt;
  require(v.is_number(), join(path, key), "expected a number or null");
  return v.get<double>();
}

std::uint64_t unsigned_int(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = field(obj, key, path);
  require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0), join(path, key),
          "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool boolean(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = field(obj, key, path);
  require(v.is_boolean(), join(path, key), "expected a boolean");
  return v.get<bool>();
}

const Json& array(const Json& obj, const std::string& key) {
  const Json& v = field(obj, key, "");
  require(v.is_array(), key, "expected an array");
  return v;
}

Position position_from(const Json& obj, const std::string& path) {
  const Json& p = field(obj, "position", path);
  const std::string pp = join(path, "position");
  return Position{number(p, "x_m", pp), number(p, "y_m", pp)};
}

Scenario from_json(const Json& j) {
  require(j.is_object(), "", "scenario must be a JSON object");
  const auto version = unsigned_int(j, "version", "");
  require(version == kScenarioSchemaVersion, "version",
          "unsupported schema version " + std::to_string(version) + " (expected " +
              std::to_string(kScenarioSchemaVersion) + ")");
  Scenario s;
  s.seed = unsigned_int(j, "seed", "");

  const Json& r = field(j, "radio", "");
  s.radio.tx_power_watts = number(r, "tx_power_watts", "radio");
  s.radio.noise_power_watts = number(r, "noise_power_watts", "radio");
  s.radio.path_loss_exponent = number(r, "path_loss_exponent", "radio");
  s.radio.channel_bandwidth_hz = number(r, "channel_bandwidth_hz", "radio");
  s.radio.snr_gap = number(r, "snr_gap", "radio");
  s.radio.primary_interference_watts = number(r, "primary_interference_watts", "radio");
  s.radio.max_link_distance_m = optional_number(r, "max_link_distance_m", "radio");

  const Json& m = field(j, "market", "");
  s.market.plan_volume_gb = number(m, "plan_volume_gb", "market");
  s.market.plan_price_eur = number(m, "plan_price_eur", "market");
  s.market.trade_price_min_eur_gb = number(m, "trade_price_min_eur_gb", "market");
  s.market.trade_price_max_eur_gb = number(m, "trade_price_max_eur_gb", "market");
  s.market.overage_price_eur_gb = number(m, "overage_price_eur_gb", "market");
  s.market.exceed_prob = number(m, "exceed_prob", "market");
  s.market.energy_per_mb_joule = number(m, "energy_per_mb_joule", "market");
  s.market.energy_price_eur_joule = number(m, "energy_price_eur_joule", "market");
  s.market.operator_share = number(m, "operator_share", "market");
  s.market.snapshot_duration_s = number(m, "snapshot_duration_s", "market");
  s.market.sbs_max_sinr_db = optional_number(m, "sbs_max_sinr_db", "market");

  s.area_side_m = number(j, "area_side_m", "");

  const Json& pus = array(j, "pus");
  for (std::size_t k = 0; k < pus.size(); ++k) {
    const std::string p = "pus[" + std::to_string(k) + "]";
    PrimaryUser pu;
    pu.id = unsigned_int(pus[k], "id", p);
    pu.position = position_from(pus[k], p);
    pu.quota_remaining_mb = number(pus[k], "quota_remaining_mb", p);
    pu.ask_price_eur_gb = number(pus[k], "ask_price_eur_gb", p);
    s.pus.push_back(pu);
  }
  const Json& sus = array(j, "sus");
  for (std::size_t k = 0; k < sus.size(); ++k) {
    const std::string p = "sus[" + std::to_string(k) + "]";
    SecondaryUser su;
    su.id = unsigned_int(sus[k], "id", p);
    su.position = position_from(sus[k], p);
    su.demand_mb = number(sus[k], "demand_mb", p);
    su.min_sinr_db = number(sus[k], "min_sinr_db", p);
    su.duration_s = number(sus[k], "duration_s", p);
    su.valuation_eur_gb = number(sus[k], "valuation_eur_gb", p);
    su.plan_exceeded = boolean(sus[k], "plan_exceeded", p);
    su.reward_eur = number(sus[k], "reward_eur", p);
    s.sus.push_back(su);
  }
  const Json& channels = array(j, "channels");
  for (std::size_t k = 0; k < channels.size(); ++k) {
    const std::string p = "channels[" + std::to_string(k) + "]";
    Channel ch;
    ch.id = unsigned_int(channels[k], "id", p);
    const Json& mode = field(channels[k], "sharing_mode", p);
    require(mode.is_string(), p + ".sharing_mode", "expected a string");
    const auto name = mode.get<std::string>();
    if (name == "orthogonal") {
      ch.sharing_mode = SharingMode::Orthogonal;
    } else if (name == "concurrent") {
      ch.sharing_mode = SharingMode::Concurrent;
    } else {
      throw ParseError(p + ".sharing_mode", "unknown sharing mode '" + name + "'");
    }
    s.channels.push_back(ch);
  }
  validate(s);
  return s;
}

}  // namespace

std::string to_json_string(const Scenario& s, int indent) { return to_json(s).dump(indent); }

Scenario scenario_from_json_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
  return from_json(j);
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_json_string(s) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open scenario file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_string(buf.str());
}

std::string scenario_hash(const Scenario& s) {
  const std::string text = to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

Scenario with_link_requirements(Scenario s, double max_link_distance_m, double min_sinr_db) {
  s.radio.max_link_distance_m = max_link_distance_m;
  for (auto& su : s.sus) su.min_sinr_db = min_sinr_db;
  return s;
}

}  // namespace cdna
