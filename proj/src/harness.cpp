#include "skyheal/harness.hpp"

#include "skyheal/channel.hpp"
#include "skyheal/parallel.hpp"
#include "skyheal/sca_solver.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace skyheal {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string exact(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& text, char sep)
{
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    parts.push_back(item);
  }
  if (!text.empty() && text.back() == sep) {
    parts.emplace_back();
  }
  return parts;
}

std::string trim(std::string s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& text, const std::string& what)
{
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw UsageError("bad number for " + what + ": '" + text + "'");
  }
  return v;
}

template <class Int>
Int parse_int(const std::string& text, const std::string& what)
{
  const std::string t = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw UsageError("bad integer for " + what + ": '" + text + "'");
  }
  return v;
}

std::string join(const std::vector<std::string>& items, const char* sep)
{
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) {
      out += sep;
    }
    out += items[i];
  }
  return out;
}

const char* flag(bool v)
{
  return v ? "1" : "0";
}

double mean_of(const std::vector<double>& v)
{
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double min_rate_of(const SolveResult& s)
{
  return s.ue_rates.empty() ? 0.0 : *std::min_element(s.ue_rates.begin(), s.ue_rates.end());
}

Scenario with_fleet(const Scenario& base, const FleetVariant& variant, double pmax)
{
  Scenario s = base;
  s.uavs = make_fleet(variant.kind, variant.count, pmax);
  s.failure_kind = failure_kind_for(variant.kind);
  return s;
}

} // namespace

std::string FleetVariant::label() const
{
  return std::string(to_string(kind)) + ":" + std::to_string(count);
}

FleetVariant parse_fleet_variant(const std::string& text)
{
  const std::vector<std::string> parts = split(trim(text), ':');
  if (parts.empty() || parts.size() > 2) {
    throw UsageError("fleet variant must look like kind:count, got '" + text + "'");
  }
  FleetVariant v;
  try {
    v.kind = parse_platform_kind(trim(parts[0]));
  } catch (const ScenarioError& e) {
    throw UsageError(e.what());
  }
  if (parts.size() == 2) {
    v.count = parse_int<int>(parts[1], "fleet count");
  }
  if (v.count < 1) {
    throw UsageError("fleet count must be >= 1 in '" + text + "'");
  }
  return v;
}

std::vector<FleetVariant> parse_fleet_list(const std::string& text)
{
  std::vector<FleetVariant> out;
  for (const std::string& item : split(text, ',')) {
    out.push_back(parse_fleet_variant(item));
  }
  if (out.empty()) {
    throw UsageError("empty fleet list");
  }
  return out;
}

std::vector<double> parse_pmax_list(const std::string& text)
{
  std::vector<double> out;
  for (const std::string& item : split(text, ',')) {
    const double v = parse_double(item, "--pmax-list");
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw UsageError("P^max values must be positive and finite");
    }
    if (!out.empty() && !(v > out.back())) {
      throw UsageError("P^max values must be strictly increasing");
    }
    out.push_back(v);
  }
  if (out.empty()) {
    throw UsageError("empty --pmax-list");
  }
  return out;
}

std::string format_number(double value)
{
  if (std::isnan(value)) {
    return "nan";
  }
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  if (value == 0.0) {
    return "0"; // no "-0"
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string csv_field(const std::string& text)
{
  if (text.find_first_of(",\"\r\n") == std::string::npos) {
    return text;
  }
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header)
  : m_columns(header.size())
{
  std::vector<std::string> quoted;
  for (const std::string& h : header) {
    quoted.push_back(csv_field(h));
  }
  m_text = join(quoted, ",") + "\r\n";
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& fields)
{
  if (fields.size() != m_columns) {
    throw std::logic_error("CSV row width does not match header");
  }
  std::vector<std::string> quoted;
  for (const std::string& f : fields) {
    quoted.push_back(csv_field(f));
  }
  m_text += join(quoted, ",") + "\r\n";
  ++m_rows;
  return *this;
}

std::string fnv1a_hex(const std::string& bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PlacementOptions RunConfig::placement(const Scenario& scenario) const
{
  PlacementOptions p;
  p.seed = seed.value_or(scenario.rng_seed);
  p.threads = threads;
  p.sca.max_iterations = max_iterations;
  p.sca.tolerance = tolerance;
  return p;
}

CommandResult cmd_sweep(const Scenario& base,
                        const std::vector<double>& pmax_values,
                        const std::vector<FleetVariant>& variants,
                        const RunConfig& config)
{
  struct Cell
  {
    std::string label;
    double pmax = 0.0;
    bool ok = false;
    PlacementResult placement;
    std::string error;
    double seconds = 0.0;
  };

  const int P = static_cast<int>(pmax_values.size());
  std::vector<Cell> cells(variants.size() * pmax_values.size());
  const int cell_threads = std::min<int>(config.threads, static_cast<int>(cells.size()));
  RunConfig inner = config;
  inner.threads = cell_threads > 1 ? 1 : config.threads;

  parallel_for(static_cast<int>(cells.size()), cell_threads, [&](int i) {
    Cell& cell = cells[i];
    const FleetVariant& variant = variants[i / P];
    cell.label = variant.label();
    cell.pmax = pmax_values[i % P];
    const auto start = Clock::now();
    try {
      const Scenario s = with_fleet(base, variant, cell.pmax);
      cell.placement = joint_optimize(s, inner.placement(s));
      cell.ok = true;
    } catch (const ScenarioError& e) {
      cell.error = e.what();
    }
    cell.seconds = seconds_since(start);
  });

  CommandResult out;
  CsvWriter csv({"variant", "pmax_w", "min_rate", "mean_rate", "total_power", "omega", "feasible"});
  std::ostringstream report;
  for (const Cell& cell : cells) {
    const bool feasible = cell.ok && cell.placement.feasible;
    if (cell.ok) {
      const SolveResult& s = cell.placement.solve;
      csv.row({cell.label,
               format_number(cell.pmax),
               format_number(min_rate_of(s)),
               format_number(mean_of(s.ue_rates)),
               format_number(s.powers.total()),
               format_number(s.omega),
               flag(feasible)});
    } else {
      csv.row({cell.label, format_number(cell.pmax), "", "", "", "", "0"});
    }
    report << cell.label << " pmax=" << format_number(cell.pmax)
           << (feasible ? "" : " INFEASIBLE")
           << (cell.ok ? " min_rate=" + format_number(min_rate_of(cell.placement.solve)) : " " + cell.error)
           << "\n";
    out.solve_seconds.push_back(cell.seconds);
  }
  // The largest budget of every variant must be servable.
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const Cell& last = cells[v * P + P - 1];
    if (!(last.ok && last.placement.feasible)) {
      out.exit_code = kExitInfeasible;
    }
  }
  out.csv = csv.text();
  out.report = report.str();
  return out;
}

CommandResult cmd_table(const Scenario& scenario, const RunConfig& config)
{
  const auto start = Clock::now();
  const PlacementResult r = joint_optimize(scenario, config.placement(scenario));

  CommandResult out;
  out.solve_seconds.push_back(seconds_since(start));
  CsvWriter csv({"kind", "id", "uav_id", "power_w", "rate", "budget_fraction", "feasible"});
  const char* ok = flag(r.feasible);
  const bool assigned = r.assignment.num_ues() == scenario.num_ues();

  for (int u = 0; u < scenario.num_ues(); ++u) {
    const int d = assigned ? r.assignment.serving_uav(u) : -1;
    const bool solved = assigned && !r.solve.ue_rates.empty();
    csv.row({"ue",
             std::to_string(scenario.ues[u].id),
             d >= 0 ? std::to_string(scenario.uavs[d].id) : "",
             solved ? format_number(r.solve.powers.ue_total(u)) : "",
             solved ? format_number(r.solve.ue_rates[u]) : "",
             "",
             ok});
  }
  std::ostringstream report;
  for (int d = 0; d < scenario.num_uavs(); ++d) {
    const double used = assigned && r.solve.powers.num_uavs() == scenario.num_uavs() ? r.solve.powers.uav_total(d) : 0.0;
    const double fraction = used / scenario.uavs[d].max_power;
    csv.row({"uav",
             std::to_string(scenario.uavs[d].id),
             std::to_string(scenario.uavs[d].id),
             format_number(used),
             "",
             format_number(fraction),
             ok});
    report << "uav " << scenario.uavs[d].id << " at (" << format_number(r.positions[d].x) << ", "
           << format_number(r.positions[d].y) << ") power " << format_number(used) << " W ("
           << format_number(100.0 * fraction) << "% of budget)\n";
  }
  report << (r.feasible ? "feasible" : "INFEASIBLE: rate threshold not met") << ", min rate "
         << format_number(min_rate_of(r.solve)) << ", objective " << format_number(r.solve.objective) << "\n";

  out.csv = csv.text();
  out.report = report.str();
  out.exit_code = r.feasible ? kExitOk : kExitInfeasible;
  return out;
}

CommandResult cmd_trace(const Scenario& scenario, const RunConfig& config)
{
  const auto start = Clock::now();
  const PlacementResult r = joint_optimize(scenario, config.placement(scenario));

  CommandResult out;
  out.solve_seconds.push_back(seconds_since(start));
  CsvWriter csv({"iteration", "uav_id", "x", "y", "radius", "objective"});
  for (const TraceEntry& e : r.trace) {
    for (int d = 0; d < scenario.num_uavs(); ++d) {
      csv.row({std::to_string(e.iteration),
               std::to_string(scenario.uavs[d].id),
               format_number(e.positions[d].x),
               format_number(e.positions[d].y),
               format_number(e.radius),
               format_number(e.objective)});
    }
  }
  std::ostringstream report;
  report << r.iterations << " iterations, " << (r.converged ? "converged" : "iteration cap reached")
         << ", objective " << format_number(r.solve.objective) << (r.feasible ? "" : " (INFEASIBLE)") << "\n";
  out.csv = csv.text();
  out.report = report.str();
  out.exit_code = r.feasible ? kExitOk : kExitInfeasible;
  return out;
}

CommandResult cmd_validate(const Scenario& scenario, const RunConfig& config, int grid_levels)
{
  validate(scenario);
  const std::vector<double> levels = uniform_power_grid(scenario, grid_levels);

  ScaOptions sca;
  sca.max_iterations = config.max_iterations;
  sca.tolerance = config.tolerance;

  Particle positions;
  for (const UavPlatform& uav : scenario.uavs) {
    positions.push_back(uav.position);
  }

  CommandResult out;
  auto start = Clock::now();
  OracleResult oracle;
  try {
    oracle = brute_force_oracle(scenario, levels);
  } catch (const OracleSizeError& e) {
    throw UsageError(e.what());
  }
  out.solve_seconds.push_back(seconds_since(start));
  start = Clock::now();
  const PipelineResult heuristic = solve_at_positions(scenario, positions, sca);
  out.solve_seconds.push_back(seconds_since(start));

  const bool both = heuristic.score() > -INFINITY && oracle.solve.feasible;
  const double gap = both ? (oracle.solve.objective - heuristic.solve.objective) / std::abs(oracle.solve.objective)
                          : std::nan("");

  CsvWriter csv({"method", "objective", "omega", "total_power", "feasible", "relative_gap"});
  const SolveResult& h = heuristic.solve;
  csv.row({"sca",
           format_number(h.objective),
           format_number(h.omega),
           heuristic.assignable ? format_number(h.powers.total()) : "",
           flag(heuristic.score() > -INFINITY),
           format_number(gap)});
  csv.row({"oracle",
           format_number(oracle.solve.objective),
           format_number(oracle.solve.omega),
           oracle.solve.powers.num_ues() ? format_number(oracle.solve.powers.total()) : "",
           flag(oracle.solve.feasible),
           format_number(gap)});

  std::ostringstream report;
  report << "sca    objective " << format_number(h.objective) << (heuristic.score() > -INFINITY ? "" : " (infeasible)")
         << "\noracle objective " << format_number(oracle.solve.objective)
         << (oracle.solve.feasible ? "" : " (infeasible)") << "  [" << oracle.candidates << " candidates, "
         << levels.size() << " power levels]\nrelative gap " << format_number(gap) << "\n";
  out.csv = csv.text();
  out.report = report.str();
  out.exit_code = oracle.solve.feasible ? kExitOk : kExitInfeasible;
  return out;
}

Scenario cmd_gen(const Scenario& scenario_template, int num_ues, std::uint64_t seed)
{
  Scenario s = generate_random_scenario(scenario_template, num_ues, seed);
  s.rng_seed = seed;
  return s;
}

std::string RunManifest::to_text() const
{
  std::vector<std::string> pmax;
  for (double v : invocation.pmax_values) {
    pmax.push_back(exact(v));
  }
  std::vector<std::string> fleet;
  for (const FleetVariant& f : invocation.fleet) {
    fleet.push_back(f.label());
  }
  std::vector<std::string> clocks;
  for (double v : solve_seconds) {
    clocks.push_back(format_number(v));
  }

  std::ostringstream out;
  out << "# skyheal run manifest\n"
      << "version=" << version << "\n"
      << "command=" << invocation.command << "\n"
      << "scenario=" << invocation.scenario.string() << "\n"
      << "scenario_fnv1a=" << scenario_hash << "\n"
      << "out=" << invocation.out.string() << "\n"
      << "pmax_list=" << join(pmax, ",") << "\n"
      << "fleet=" << join(fleet, ",") << "\n"
      << "seed=" << (invocation.seed ? std::to_string(*invocation.seed) : "") << "\n"
      << "effective_seed=" << effective_seed << "\n"
      << "max_iters=" << invocation.max_iterations << "\n"
      << "tol=" << exact(invocation.tolerance) << "\n"
      << "ues=" << invocation.num_ues << "\n"
      << "threads=" << invocation.threads << "\n"
      << "output_fnv1a=" << output_hash << "\n"
      << "wall_clock_total_s=" << format_number(total_seconds) << "\n"
      << "wall_clock_s=" << join(clocks, ",") << "\n";
  return out.str();
}

RunManifest RunManifest::parse(const std::string& text)
{
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("malformed manifest line: '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw UsageError(std::string("manifest is missing '") + key + "'");
    }
    return it->second;
  };

  RunManifest m;
  m.version = get("version");
  m.invocation.command = get("command");
  m.invocation.scenario = get("scenario");
  m.scenario_hash = get("scenario_fnv1a");
  m.invocation.out = get("out");
  if (!get("pmax_list").empty()) {
    for (const std::string& v : split(get("pmax_list"), ',')) {
      m.invocation.pmax_values.push_back(parse_double(v, "pmax_list"));
    }
  }
  if (!get("fleet").empty()) {
    m.invocation.fleet = parse_fleet_list(get("fleet"));
  }
  if (!get("seed").empty()) {
    m.invocation.seed = parse_int<std::uint64_t>(get("seed"), "seed");
  }
  m.effective_seed = parse_int<std::uint64_t>(get("effective_seed"), "effective_seed");
  m.invocation.max_iterations = parse_int<int>(get("max_iters"), "max_iters");
  m.invocation.tolerance = parse_double(get("tol"), "tol");
  m.invocation.num_ues = parse_int<int>(get("ues"), "ues");
  m.invocation.threads = parse_int<int>(get("threads"), "threads");
  m.output_hash = get("output_fnv1a");
  return m;
}

std::filesystem::path manifest_path(const std::filesystem::path& out)
{
  std::filesystem::path p = out;
  p += ".manifest";
  return p;
}

std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw UsageError("cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw UsageError("cannot write " + path.string());
  }
  out << bytes;
  if (!out.flush()) {
    throw UsageError("write failed for " + path.string());
  }
}

int default_thread_count()
{
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("SKYHEAL_THREADS"); env != nullptr && *env != '\0') {
    try {
      const int cap = parse_int<int>(env, "SKYHEAL_THREADS");
      if (cap >= 1) {
        n = std::min(n, cap);
      }
    } catch (const UsageError&) {
      // ignored: keep the hardware default
    }
  }
  return n;
}

int execute(const Invocation& inv, std::ostream* log)
{
  if (inv.out.empty()) {
    throw UsageError("--out is required");
  }
  if (inv.max_iterations < 1) {
    throw UsageError("--max-iters must be >= 1");
  }
  if (!(inv.tolerance > 0.0)) {
    throw UsageError("--tol must be positive");
  }

  const auto start = Clock::now();
  RunManifest manifest;
  manifest.invocation = inv;
  if (!inv.scenario.empty()) {
    // replay may run from another directory
    manifest.invocation.scenario = std::filesystem::absolute(inv.scenario).lexically_normal();
  }

  std::string output;
  CommandResult result;

  if (inv.command == "gen") {
    Scenario base;
    if (!inv.scenario.empty()) {
      const std::string text = read_file(inv.scenario);
      manifest.scenario_hash = fnv1a_hex(text);
      base = scenario_from_json(text);
    } else {
      const FleetVariant f = inv.fleet.empty() ? FleetVariant{} : inv.fleet.front();
      const double pmax = inv.pmax_values.empty() ? default_platform(f.kind).max_power : inv.pmax_values.front();
      base.uavs = make_fleet(f.kind, f.count, pmax);
      base.failure_kind = failure_kind_for(f.kind);
    }
    const std::uint64_t seed = inv.seed.value_or(base.rng_seed);
    manifest.effective_seed = seed;
    output = to_json(cmd_gen(base, inv.num_ues, seed));
    result.report = "wrote " + std::to_string(inv.num_ues) + " UEs\n";
  } else {
    if (inv.scenario.empty()) {
      throw UsageError("--scenario is required");
    }
    const std::string text = read_file(inv.scenario);
    manifest.scenario_hash = fnv1a_hex(text);
    const Scenario scenario = scenario_from_json(text);
    manifest.effective_seed = inv.seed.value_or(scenario.rng_seed);

    RunConfig config;
    config.seed = inv.seed;
    config.max_iterations = inv.max_iterations;
    config.tolerance = inv.tolerance;
    config.threads = std::max(1, inv.threads);

    if (inv.command == "sweep") {
      if (inv.pmax_values.empty()) {
        throw UsageError("sweep needs --pmax-list");
      }
      std::vector<FleetVariant> fleet = inv.fleet;
      if (fleet.empty()) {
        fleet = {{PlatformKind::Drone, 4}, {PlatformKind::Helikite, 1}};
      }
      result = cmd_sweep(scenario, inv.pmax_values, fleet, config);
    } else if (inv.command == "table") {
      result = cmd_table(scenario, config);
    } else if (inv.command == "trace") {
      result = cmd_trace(scenario, config);
    } else if (inv.command == "validate") {
      result = cmd_validate(scenario, config);
    } else {
      throw UsageError("unknown command '" + inv.command + "'");
    }
    output = result.csv;
  }

  write_file(inv.out, output);
  manifest.output_hash = fnv1a_hex(output);
  manifest.solve_seconds = result.solve_seconds;
  manifest.total_seconds = seconds_since(start);
  write_file(manifest_path(inv.out), manifest.to_text());

  if (log != nullptr) {
    *log << result.report;
  }
  return result.exit_code;
}

ReplayOutcome replay(const std::filesystem::path& manifest_file, const std::filesystem::path& out, std::ostream* log)
{
  const RunManifest recorded = RunManifest::parse(read_file(manifest_file));
  if (recorded.version != kVersion) {
    throw UsageError("manifest was written by version " + recorded.version + ", this is " + kVersion);
  }
  Invocation inv = recorded.invocation;
  if (!inv.scenario.empty() && fnv1a_hex(read_file(inv.scenario)) != recorded.scenario_hash) {
    throw UsageError("scenario file " + inv.scenario.string() + " changed since the recorded run");
  }
  if (!out.empty()) {
    inv.out = out;
  }

  ReplayOutcome outcome;
  outcome.exit_code = execute(inv, log);
  outcome.regenerated = inv.out;
  outcome.identical = fnv1a_hex(read_file(inv.out)) == recorded.output_hash;
  return outcome;
}

} // namespace skyheal
