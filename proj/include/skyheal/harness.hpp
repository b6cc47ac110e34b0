#ifndef SKYHEAL_HARNESS_HPP
#define SKYHEAL_HARNESS_HPP

#include "skyheal/placement.hpp"
#include "skyheal/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace skyheal {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int
{
  kExitOk = 0,
  kExitUsage = 1,
  kExitInfeasible = 2
};

/// Bad flags or unreadable inputs; maps to exit code 1.
class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct FleetVariant
{
  PlatformKind kind = PlatformKind::Drone;
  int count = 1;

  /// "drone:4", "helikite:1"
  std::string label() const;
  bool operator==(const FleetVariant&) const = default;
};

/// Parses "kind:count" (count defaults to 1).
FleetVariant parse_fleet_variant(const std::string& text);
std::vector<FleetVariant> parse_fleet_list(const std::string& text);
/// Comma-separated watts; must be strictly increasing and positive.
std::vector<double> parse_pmax_list(const std::string& text);

/// Printf "%.6g", with "inf", "-inf" and "nan" spelled out.
std::string format_number(double value);
/// RFC-4180 field quoting.
std::string csv_field(const std::string& text);

class CsvWriter
{
public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& fields);
  const std::string& text() const { return m_text; }
  int rows() const { return m_rows; }

private:
  std::size_t m_columns;
  std::string m_text;
  int m_rows = 0;
};

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

struct RunConfig
{
  std::optional<std::uint64_t> seed;
  int max_iterations = 100;
  double tolerance = 1e-6;
  int threads = 1;

  PlacementOptions placement(const Scenario& scenario) const;
};

struct CommandResult
{
  std::string csv;
  /// Human-readable summary for stdout.
  std::string report;
  int exit_code = kExitOk;
  /// Wall-clock of each placement or solve, in output order.
  std::vector<double> solve_seconds;
};

/// One row per (variant, P^max): joint placement and powers with every UAV
/// of the variant at that budget.
CommandResult cmd_sweep(const Scenario& base,
                        const std::vector<double>& pmax_values,
                        const std::vector<FleetVariant>& variants,
                        const RunConfig& config);

/// Per-UE association, power and rate plus per-UAV budget use.
CommandResult cmd_table(const Scenario& scenario, const RunConfig& config);

/// Placement trace, one row per UAV per iteration.
CommandResult cmd_trace(const Scenario& scenario, const RunConfig& config);

/// Heuristic + SCA against the brute-force oracle at the scenario's UAV
/// positions.
CommandResult cmd_validate(const Scenario& scenario, const RunConfig& config, int grid_levels = 6);

/// Random UEs over the template's area and fleet.
Scenario cmd_gen(const Scenario& scenario_template, int num_ues, std::uint64_t seed);

/// Everything needed to run (or re-run) a subcommand.
struct Invocation
{
  std::string command;
  std::filesystem::path scenario;
  std::filesystem::path out;
  std::vector<double> pmax_values;
  std::vector<FleetVariant> fleet;
  std::optional<std::uint64_t> seed;
  int max_iterations = 100;
  double tolerance = 1e-6;
  int num_ues = 10;
  int threads = 1;
};

struct RunManifest
{
  Invocation invocation;
  std::string version = kVersion;
  std::string scenario_hash;
  std::uint64_t effective_seed = 0;
  std::string output_hash;
  std::vector<double> solve_seconds;
  double total_seconds = 0.0;

  std::string to_text() const;
  static RunManifest parse(const std::string& text);
};

std::filesystem::path manifest_path(const std::filesystem::path& out);

/// Loads inputs, runs the command, writes `out` and its manifest. Prints
/// the report to `log` when non-null. Returns the exit code; throws
/// UsageError or ScenarioError on bad input.
int execute(const Invocation& invocation, std::ostream* log = nullptr);

struct ReplayOutcome
{
  int exit_code = kExitOk;
  bool identical = false;
  std::filesystem::path regenerated;
};

/// Re-runs the invocation recorded in a manifest, writing to `out` (or the
/// recorded output when empty) and comparing its bytes with the recorded
/// output hash.
ReplayOutcome replay(const std::filesystem::path& manifest, const std::filesystem::path& out, std::ostream* log = nullptr);

/// Worker threads: hardware concurrency, capped by SKYHEAL_THREADS.
int default_thread_count();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

} // namespace skyheal

#endif // SKYHEAL_HARNESS_HPP
