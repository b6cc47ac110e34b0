#include "skyheal/scenario.hpp"

#include "skyheal/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace skyheal {

using nlohmann::json;

namespace {

std::string index_path(const char* array, std::size_t i, const char* field)
{
  return std::string(array) + "[" + std::to_string(i) + "]." + field;
}

void require_finite(const Position2D& p, const std::string& field)
{
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw ScenarioError(field, "coordinates must be finite");
  }
}

bool inside(const Position2D& p, const Position2D& lo, const Position2D& hi)
{
  return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
}

// Everything except the UE list, so generate_random_scenario can check a
// UE-less template with the same rules.
void validate_frame(const Scenario& s)
{
  require_finite(s.area_min, "area");
  require_finite(s.area_max, "area");
  if (s.area_min.x > s.area_max.x || s.area_min.y > s.area_max.y) {
    throw ScenarioError("area", "area minimum exceeds maximum");
  }
  if (s.num_subchannels < 1) {
    throw ScenarioError("spectrum.num_subchannels", "num_subchannels must be ≥ 1");
  }
  if (!(s.rate_threshold > 0.0) || !std::isfinite(s.rate_threshold)) {
    throw ScenarioError("rate_threshold", "rate_threshold must be > 0");
  }
  if (!(s.channel.ref_gain > 0.0) || !std::isfinite(s.channel.ref_gain)) {
    throw ScenarioError("channel.ref_gain", "ref_gain must be > 0");
  }
  if (!(s.channel.noise_power > 0.0) || !std::isfinite(s.channel.noise_power)) {
    throw ScenarioError("channel.noise_power", "noise_power must be > 0");
  }
  if (s.channel.ref_distance != 1.0) {
    throw ScenarioError("channel.ref_distance", "ref_distance must be 1.0");
  }
  if (s.uavs.empty()) {
    throw ScenarioError("uavs", "at least one UAV is required");
  }

  const PlatformKind expected = s.failure_kind == FailureKind::ShortTerm
                                  ? PlatformKind::Drone
                                  : PlatformKind::Helikite;
  std::set<int> ids;
  for (std::size_t i = 0; i < s.uavs.size(); ++i) {
    const UavPlatform& uav = s.uavs[i];
    if (!ids.insert(uav.id).second) {
      throw ScenarioError(index_path("uavs", i, "id"), "duplicate UAV id");
    }
    if (uav.kind != expected) {
      throw ScenarioError(index_path("uavs", i, "kind"),
                          std::string(to_string(uav.kind)) + " not allowed in a " +
                            to_string(s.failure_kind) + " scenario");
    }
    if (!(uav.altitude > 0.0) || !std::isfinite(uav.altitude)) {
      throw ScenarioError(index_path("uavs", i, "altitude"), "altitude must be > 0");
    }
    if (!(uav.max_power > 0.0) || !std::isfinite(uav.max_power)) {
      throw ScenarioError(index_path("uavs", i, "max_power"), "max_power must be > 0");
    }
    require_finite(uav.position, index_path("uavs", i, "x"));
    require_finite(uav.position_min, index_path("uavs", i, "x_min"));
    require_finite(uav.position_max, index_path("uavs", i, "x_max"));
    if (!inside(uav.position, uav.position_min, uav.position_max)) {
      throw ScenarioError(index_path("uavs", i, "x"), "position outside its bounds");
    }
  }
}

json uav_json(const UavPlatform& uav)
{
  return json{{"id", uav.id},
              {"kind", to_string(uav.kind)},
              {"altitude", uav.altitude},
              {"x", uav.position.x},
              {"y", uav.position.y},
              {"x_min", uav.position_min.x},
              {"x_max", uav.position_max.x},
              {"y_min", uav.position_min.y},
              {"y_max", uav.position_max.y},
              {"max_power", uav.max_power}};
}

const json& member(const json& object, const char* key, const std::string& path)
{
  if (!object.is_object()) {
    throw ScenarioError(path, "expected an object");
  }
  auto it = object.find(key);
  if (it == object.end()) {
    throw ScenarioError(path.empty() ? key : path + "." + key, "missing field");
  }
  return *it;
}

std::string child(const std::string& path, const char* key)
{
  return path.empty() ? key : path + "." + key;
}

double get_number(const json& object, const char* key, const std::string& path)
{
  const json& v = member(object, key, path);
  if (!v.is_number()) {
    throw ScenarioError(child(path, key), "expected a number");
  }
  return v.get<double>();
}

std::int64_t get_integer(const json& object, const char* key, const std::string& path)
{
  const json& v = member(object, key, path);
  if (!v.is_number_integer()) {
    throw ScenarioError(child(path, key), "expected an integer");
  }
  return v.get<std::int64_t>();
}

std::string get_string(const json& object, const char* key, const std::string& path)
{
  const json& v = member(object, key, path);
  if (!v.is_string()) {
    throw ScenarioError(child(path, key), "expected a string");
  }
  return v.get<std::string>();
}

} // namespace

const char* to_string(PlatformKind kind)
{
  return kind == PlatformKind::Drone ? "drone" : "helikite";
}

const char* to_string(FailureKind kind)
{
  return kind == FailureKind::ShortTerm ? "short_term" : "long_term";
}

PlatformKind parse_platform_kind(const std::string& text)
{
  if (text == "drone") {
    return PlatformKind::Drone;
  }
  if (text == "helikite") {
    return PlatformKind::Helikite;
  }
  throw ScenarioError("", "unknown platform kind '" + text + "'");
}

FailureKind parse_failure_kind(const std::string& text)
{
  if (text == "short_term") {
    return FailureKind::ShortTerm;
  }
  if (text == "long_term") {
    return FailureKind::LongTerm;
  }
  throw ScenarioError("", "unknown failure kind '" + text + "'");
}

FailureKind failure_kind_for(PlatformKind kind)
{
  return kind == PlatformKind::Drone ? FailureKind::ShortTerm : FailureKind::LongTerm;
}

UavPlatform default_platform(PlatformKind kind)
{
  UavPlatform uav;
  uav.id = 1;
  uav.kind = kind;
  uav.altitude = kind == PlatformKind::Drone ? 50.0 : 80.0;
  uav.max_power = kind == PlatformKind::Drone ? 1.0 : 2.25;
  uav.position_min = {0.0, 0.0};
  uav.position_max = {400.0, 400.0};
  uav.position = {200.0, 200.0};
  return uav;
}

std::vector<UavPlatform> make_fleet(PlatformKind kind, int count, double max_power)
{
  std::vector<UavPlatform> fleet;
  for (int d = 0; d < count; ++d) {
    UavPlatform uav = default_platform(kind);
    uav.id = d + 1;
    uav.max_power = max_power;
    fleet.push_back(uav);
  }
  return fleet;
}

void validate(const Scenario& s)
{
  validate_frame(s);
  if (s.ues.empty()) {
    throw ScenarioError("ues", "at least one UE is required");
  }
  std::set<int> ids;
  for (std::size_t i = 0; i < s.ues.size(); ++i) {
    const UeTerminal& ue = s.ues[i];
    if (!ids.insert(ue.id).second) {
      throw ScenarioError(index_path("ues", i, "id"), "duplicate UE id");
    }
    require_finite(ue.position, index_path("ues", i, "x"));
    if (!inside(ue.position, s.area_min, s.area_max)) {
      throw ScenarioError(index_path("ues", i, "x"), "UE outside the scenario area");
    }
  }
  if (s.exclusive_subchannels &&
      static_cast<long long>(s.num_uavs()) * s.num_subchannels < s.num_ues()) {
    throw ScenarioError("spectrum.num_subchannels",
                        "D*M sub-channels cannot serve U UEs exclusively");
  }
}

Scenario generate_random_scenario(const Scenario& scenario_template,
                                  int num_ues,
                                  std::uint64_t seed)
{
  validate_frame(scenario_template);
  if (num_ues < 1) {
    throw ScenarioError("ues", "num_ues must be ≥ 1");
  }
  if (scenario_template.exclusive_subchannels &&
      static_cast<long long>(scenario_template.num_uavs()) *
          scenario_template.num_subchannels <
        num_ues) {
    throw ScenarioError("ues", "num_ues exceeds the D*M sub-channel capacity");
  }

  Scenario s = scenario_template;
  s.rng_seed = seed;
  s.ues.clear();
  std::mt19937_64 engine(seed);
  for (int u = 0; u < num_ues; ++u) {
    UeTerminal ue;
    ue.id = u + 1;
    ue.position.x = uniform(engine, s.area_min.x, s.area_max.x);
    ue.position.y = uniform(engine, s.area_min.y, s.area_max.y);
    s.ues.push_back(ue);
  }
  validate(s);
  return s;
}

std::string to_json(const Scenario& s)
{
  json doc;
  doc["area"] = {{"x_min", s.area_min.x},
                 {"y_min", s.area_min.y},
                 {"x_max", s.area_max.x},
                 {"y_max", s.area_max.y}};
  doc["channel"] = {{"ref_gain", s.channel.ref_gain},
                    {"ref_distance", s.channel.ref_distance},
                    {"noise_power", s.channel.noise_power}};
  doc["spectrum"] = {{"num_subchannels", s.num_subchannels},
                     {"exclusive", s.exclusive_subchannels}};
  doc["rate_threshold"] = s.rate_threshold;
  doc["failure_kind"] = to_string(s.failure_kind);
  doc["seed"] = s.rng_seed;
  json ues = json::array();
  for (const UeTerminal& ue : s.ues) {
    ues.push_back({{"id", ue.id}, {"x", ue.position.x}, {"y", ue.position.y}});
  }
  doc["ues"] = std::move(ues);
  json uavs = json::array();
  for (const UavPlatform& uav : s.uavs) {
    uavs.push_back(uav_json(uav));
  }
  doc["uavs"] = std::move(uavs);
  return doc.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text)
{
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("", std::string("invalid JSON: ") + e.what());
  }

  Scenario s;
  const json& area = member(doc, "area", "");
  s.area_min = {get_number(area, "x_min", "area"), get_number(area, "y_min", "area")};
  s.area_max = {get_number(area, "x_max", "area"), get_number(area, "y_max", "area")};

  const json& channel = member(doc, "channel", "");
  s.channel.ref_gain = get_number(channel, "ref_gain", "channel");
  s.channel.ref_distance = get_number(channel, "ref_distance", "channel");
  s.channel.noise_power = get_number(channel, "noise_power", "channel");

  const json& spectrum = member(doc, "spectrum", "");
  s.num_subchannels = static_cast<int>(get_integer(spectrum, "num_subchannels", "spectrum"));
  if (auto it = spectrum.find("exclusive"); it != spectrum.end()) {
    if (!it->is_boolean()) {
      throw ScenarioError("spectrum.exclusive", "expected a boolean");
    }
    s.exclusive_subchannels = it->get<bool>();
  }

  s.rate_threshold = get_number(doc, "rate_threshold", "");
  try {
    s.failure_kind = parse_failure_kind(get_string(doc, "failure_kind", ""));
  } catch (const ScenarioError& e) {
    throw ScenarioError("failure_kind", e.what());
  }
  const json& seed = member(doc, "seed", "");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw ScenarioError("seed", "expected an integer");
  }
  s.rng_seed = seed.get<std::uint64_t>();

  const json& ues = member(doc, "ues", "");
  if (!ues.is_array()) {
    throw ScenarioError("ues", "expected an array");
  }
  for (std::size_t i = 0; i < ues.size(); ++i) {
    const std::string path = "ues[" + std::to_string(i) + "]";
    UeTerminal ue;
    ue.id = static_cast<int>(get_integer(ues[i], "id", path));
    ue.position = {get_number(ues[i], "x", path), get_number(ues[i], "y", path)};
    s.ues.push_back(ue);
  }

  const json& uavs = member(doc, "uavs", "");
  if (!uavs.is_array()) {
    throw ScenarioError("uavs", "expected an array");
  }
  for (std::size_t i = 0; i < uavs.size(); ++i) {
    const std::string path = "uavs[" + std::to_string(i) + "]";
    const json& item = uavs[i];
    UavPlatform uav;
    uav.id = static_cast<int>(get_integer(item, "id", path));
    try {
      uav.kind = parse_platform_kind(get_string(item, "kind", path));
    } catch (const ScenarioError& e) {
      throw ScenarioError(path + ".kind", e.what());
    }
    uav.altitude = get_number(item, "altitude", path);
    uav.position = {get_number(item, "x", path), get_number(item, "y", path)};
    uav.position_min = {get_number(item, "x_min", path), get_number(item, "y_min", path)};
    uav.position_max = {get_number(item, "x_max", path), get_number(item, "y_max", path)};
    uav.max_power = get_number(item, "max_power", path);
    s.uavs.push_back(uav);
  }

  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open scenario file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_json(buffer.str());
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path)
{
  validate(scenario);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write scenario file: " + path.string());
  }
  out << to_json(scenario);
  if (!out) {
    throw std::runtime_error("failed while writing scenario file: " + path.string());
  }
}

} // namespace skyheal
