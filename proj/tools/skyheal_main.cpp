#include "skyheal/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace skyheal;

namespace {

struct Flags
{
  std::string scenario;
  std::string out;
  std::string pmax_list;
  std::string fleet;
  std::uint64_t seed = 0;
  int max_iters = 100;
  double tol = 1e-6;
  int ues = 10;
};

void add_common(CLI::App* cmd, Flags& f, bool needs_scenario)
{
  auto* s = cmd->add_option("--scenario", f.scenario, "scenario JSON file");
  if (needs_scenario) {
    s->required();
  }
  cmd->add_option("--out", f.out, "output file (a .manifest sidecar is written next to it)")->required();
  cmd->add_option("--seed", f.seed, "placement / generator seed (default: scenario seed)");
  cmd->add_option("--pmax-list", f.pmax_list, "comma-separated per-UAV budgets in W");
  cmd->add_option("--fleet", f.fleet, "comma-separated kind:count variants, e.g. drone:4,helikite:1");
  cmd->add_option("--max-iters", f.max_iters, "SCA iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", f.tol, "SCA objective tolerance")->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"UAV cell outage compensation planner"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Flags f;
  std::string manifest;
  const std::pair<const char*, const char*> commands[] = {
    {"sweep", "min/mean rate versus per-UAV budget for several fleets"},
    {"table", "association, power and rate per UE, budget use per UAV"},
    {"trace", "placement search trace"},
    {"validate", "heuristic + SCA against the brute-force oracle (tiny scenarios)"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, f, true);
    subs.push_back(cmd);
  }
  CLI::App* gen = app.add_subcommand("gen", "random scenario from a template or a fleet");
  add_common(gen, f, false);
  gen->add_option("--ues", f.ues, "number of UEs")->check(CLI::PositiveNumber);
  subs.push_back(gen);

  CLI::App* rerun = app.add_subcommand("replay", "re-run a manifest and compare the output bytes");
  rerun->add_option("manifest", manifest, "manifest file")->required();
  rerun->add_option("--out", f.out, "where to write the regenerated output (default: <recorded>.replay)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (rerun->parsed()) {
      std::filesystem::path out = f.out;
      if (out.empty()) {
        out = RunManifest::parse(read_file(manifest)).invocation.out;
        out += ".replay";
      }
      const ReplayOutcome r = replay(manifest, out, &std::cout);
      std::cout << (r.identical ? "identical: " : "DIFFERENT: ") << r.regenerated.string() << "\n";
      return r.identical ? r.exit_code : kExitUsage;
    }

    Invocation inv;
    for (CLI::App* cmd : subs) {
      if (cmd->parsed()) {
        inv.command = cmd->get_name();
        if (cmd->count("--seed")) {
          inv.seed = f.seed;
        }
      }
    }
    inv.scenario = f.scenario;
    inv.out = f.out;
    if (!f.pmax_list.empty()) {
      inv.pmax_values = parse_pmax_list(f.pmax_list);
    }
    if (!f.fleet.empty()) {
      inv.fleet = parse_fleet_list(f.fleet);
    }
    inv.max_iterations = f.max_iters;
    inv.tolerance = f.tol;
    inv.num_ues = f.ues;
    inv.threads = default_thread_count();
    return execute(inv, &std::cout);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ScenarioError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InfeasibleAssignment& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
