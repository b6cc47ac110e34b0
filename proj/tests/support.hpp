#ifndef SKYHEAL_TEST_SUPPORT_HPP
#define SKYHEAL_TEST_SUPPORT_HPP

#include "skyheal/scenario.hpp"

#include <filesystem>
#include <string>

namespace testing {

inline std::filesystem::path data_file(const std::string& name)
{
  return std::filesystem::path(SKYHEAL_TEST_DATA) / name;
}

// Fleet of `count` platforms, failure kind to match.
inline skyheal::Scenario fleet_scenario(skyheal::PlatformKind kind, int count, double pmax, int channels = 10)
{
  skyheal::Scenario s;
  s.failure_kind = skyheal::failure_kind_for(kind);
  s.uavs = skyheal::make_fleet(kind, count, pmax);
  s.num_subchannels = channels;
  return s;
}

inline skyheal::UeTerminal ue_at(int id, double x, double y)
{
  return skyheal::UeTerminal{id, {x, y}};
}

inline std::filesystem::path scratch_dir(const std::string& name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("skyheal_test_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace testing

#endif
