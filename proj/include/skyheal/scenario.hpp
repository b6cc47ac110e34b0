#ifndef SKYHEAL_SCENARIO_HPP
#define SKYHEAL_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace skyheal {

/// Horizontal coordinates in meters.
struct Position2D
{
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Position2D&) const = default;
};

/// Ground terminal of the failed cell. Altitude is always zero.
struct UeTerminal
{
  int id = 0;
  Position2D position;

  bool operator==(const UeTerminal&) const = default;
};

enum class PlatformKind
{
  Drone,
  Helikite
};

enum class FailureKind
{
  ShortTerm,
  LongTerm
};

/// One flying base station. Altitude is fixed per platform; only the
/// horizontal position is a decision variable.
struct UavPlatform
{
  int id = 0;
  PlatformKind kind = PlatformKind::Drone;
  double altitude = 0.0;
  Position2D position;
  Position2D position_min;
  Position2D position_max;
  double max_power = 0.0;

  bool operator==(const UavPlatform&) const = default;
};

/// Free-space LoS channel constants. ref_gain is the power gain measured at
/// ref_distance (always 1 m).
struct ChannelParams
{
  double ref_gain = 1e-5;
  double ref_distance = 1.0;
  double noise_power = 1e-13;

  bool operator==(const ChannelParams&) const = default;
};

struct Scenario
{
  Position2D area_min{0.0, 0.0};
  Position2D area_max{400.0, 400.0};
  std::vector<UeTerminal> ues;
  std::vector<UavPlatform> uavs;
  int num_subchannels = 10;
  // When false, UEs of the same UAV may share a sub-channel.
  bool exclusive_subchannels = true;
  double rate_threshold = 0.5;
  ChannelParams channel;
  FailureKind failure_kind = FailureKind::ShortTerm;
  std::uint64_t rng_seed = 1;

  int num_ues() const { return static_cast<int>(ues.size()); }
  int num_uavs() const { return static_cast<int>(uavs.size()); }

  bool operator==(const Scenario&) const = default;
};

/// Raised for malformed or inconsistent scenarios. `field()` holds the
/// JSON-style path of the offending value, e.g. "uavs[2].altitude".
class ScenarioError : public std::runtime_error
{
public:
  ScenarioError(std::string field, const std::string& message)
    : std::runtime_error(field.empty() ? message : field + ": " + message),
      m_field(std::move(field))
  {}

  const std::string& field() const noexcept { return m_field; }

private:
  std::string m_field;
};

const char* to_string(PlatformKind kind);
const char* to_string(FailureKind kind);
PlatformKind parse_platform_kind(const std::string& text);
FailureKind parse_failure_kind(const std::string& text);

/// Failure class served by a platform kind: drones heal short-term
/// failures, helikites long-term ones.
FailureKind failure_kind_for(PlatformKind kind);

/// Preset platform over the [0,400]^2 area, centered. Drone: 50 m, 1 W.
/// Helikite: 80 m, 2.25 W.
UavPlatform default_platform(PlatformKind kind);

/// Throws ScenarioError on the first violated invariant.
void validate(const Scenario& scenario);

/// Copies `scenario_template` (its UE list is ignored) and fills it with
/// `num_ues` terminals drawn i.i.d. uniformly over the area rectangle.
Scenario generate_random_scenario(const Scenario& scenario_template,
                                  int num_ues,
                                  std::uint64_t seed);

/// Fleet of `count` preset platforms of one kind, ids 1..count.
std::vector<UavPlatform> make_fleet(PlatformKind kind, int count, double max_power);

std::string to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

} // namespace skyheal

#endif // SKYHEAL_SCENARIO_HPP
