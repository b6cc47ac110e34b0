#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skyheal/assignment.hpp"
#include "skyheal/channel.hpp"
#include "skyheal/rng.hpp"
#include "skyheal/sca_solver.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

using namespace skyheal;
using doctest::Approx;
using testing::fleet_scenario;
using testing::ue_at;

namespace {

// One drone at (200,200), UEs given, M sub-channels.
Scenario one_drone(std::vector<UeTerminal> ues, int channels, double threshold = 0.5)
{
  Scenario s = fleet_scenario(PlatformKind::Drone, 1, 1.0, channels);
  s.ues = std::move(ues);
  s.rate_threshold = threshold;
  return s;
}

// Independent golden-section maximizer on [lo, hi].
double golden_max(const std::function<double(double)>& f, double lo, double hi)
{
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  for (int i = 0; i < 200; ++i) {
    if (f(c) > f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return 0.5 * (a + b);
}

void check_power_invariants(const Assignment& a, const PowerAllocation& p, const Scenario& s)
{
  for (int d = 0; d < a.num_uavs(); ++d) {
    CHECK(p.uav_total(d) <= s.uavs[d].max_power * (1.0 + 1e-12));
    for (int u = 0; u < a.num_ues(); ++u) {
      for (int m = 0; m < a.num_subchannels(); ++m) {
        CHECK(p(u, d, m) >= 0.0);
        if (!a.active(u, d, m)) {
          CHECK(p(u, d, m) == 0.0);
        }
      }
    }
  }
}

// Two drones, UEs sharing sub-channels across UAVs (interference on).
struct Interfering
{
  Scenario scenario;
  GainMatrix gains;
  Assignment assignment;
};

Interfering interfering(std::uint64_t seed, int ues = 4, int channels = 2)
{
  Interfering out;
  out.scenario = fleet_scenario(PlatformKind::Drone, 2, 1.0, channels);
  out.scenario.uavs[0].position = {120, 200};
  out.scenario.uavs[1].position = {280, 200};
  out.scenario = generate_random_scenario(out.scenario, ues, seed);
  out.gains = compute_gains(out.scenario);
  out.assignment = heuristic_assignment(out.scenario, out.gains);
  return out;
}

PowerAllocation random_powers(const Assignment& a, const Scenario& s, std::mt19937_64& rng)
{
  PowerAllocation p(a.num_ues(), a.num_uavs(), a.num_subchannels());
  for (int d = 0; d < a.num_uavs(); ++d) {
    double used = 0.0;
    for (int u = 0; u < a.num_ues(); ++u) {
      for (int m = 0; m < a.num_subchannels(); ++m) {
        if (a.active(u, d, m)) {
          // log-uniform so tiny and large powers both show up
          p(u, d, m) = std::pow(10.0, uniform(rng, -6.0, 0.0));
          used += p(u, d, m);
        }
      }
    }
    const double scale = uniform(rng, 0.05, 1.0) * s.uavs[d].max_power / std::max(used, 1e-300);
    for (int u = 0; u < a.num_ues(); ++u) {
      for (int m = 0; m < a.num_subchannels(); ++m) {
        p(u, d, m) *= std::min(1.0, scale);
      }
    }
  }
  return p;
}

} // namespace

TEST_CASE("objective arithmetic")
{
  Scenario s = fleet_scenario(PlatformKind::Drone, 4, 1.0);
  s.rate_threshold = 0.5;
  PowerAllocation zero(1, 4, 1);
  CHECK(objective_value(0.5, zero, s) == Approx(1.0));
  PowerAllocation full(1, 4, 1);
  for (int d = 0; d < 4; ++d) {
    full(0, d, 0) = 1.0;
  }
  CHECK(objective_value(0.5, full, s) == Approx(0.0));
  PowerAllocation half(1, 4, 1);
  half(0, 0, 0) = 1.0;
  half(0, 1, 0) = 1.0;
  CHECK(objective_value(1.0, half, s) == Approx(1.5));
  CHECK(total_budget(s) == 4.0);
}

TEST_CASE("initial powers: 0.1 W per tuple, scaled into the budget")
{
  const Scenario s = one_drone({ue_at(1, 200, 200), ue_at(2, 100, 100)}, 4);
  const Assignment a = heuristic_assignment(s, compute_gains(s));
  PowerAllocation p = initial_powers(a, s);
  CHECK(p.total() == Approx(0.4));
  CHECK(p(0, 0, 0) == Approx(0.1));

  const Scenario crowded = one_drone({ue_at(1, 200, 200)}, 20);
  const Assignment b = heuristic_assignment(crowded, compute_gains(crowded));
  p = initial_powers(b, crowded);
  CHECK(p.total() == Approx(1.0));
  CHECK(p(0, 0, 7) == Approx(0.05));
}

TEST_CASE("surrogate is exact at the expansion point and a lower bound elsewhere")
{
  std::mt19937_64 rng(42);
  double largest_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Interfering inst = interfering(seed, 4, 2);
    inst.scenario.exclusive_subchannels = false;
    inst.assignment = heuristic_assignment(inst.scenario, inst.gains);
    const double noise = inst.scenario.channel.noise_power;
    for (int trial = 0; trial < 20; ++trial) {
      const PowerAllocation ref = random_powers(inst.assignment, inst.scenario, rng);
      const PowerAllocation p = random_powers(inst.assignment, inst.scenario, rng);
      for (int u = 0; u < 4; ++u) {
        const double exact = ue_total_rate(u, inst.assignment, ref, inst.gains, noise);
        const double at_ref = surrogate_ue_rate(u, inst.assignment, ref, ref, inst.gains, noise);
        CHECK(at_ref == Approx(exact).epsilon(1e-9));
        const double truth = ue_total_rate(u, inst.assignment, p, inst.gains, noise);
        const double bound = surrogate_ue_rate(u, inst.assignment, p, ref, inst.gains, noise);
        CHECK(bound <= truth + 1e-9);
        largest_gap = std::max(largest_gap, truth - bound);
      }
    }
  }
  CHECK(largest_gap > 0.0);
}

TEST_CASE("surrogate equals the rate with no interference")
{
  const Scenario s = one_drone({ue_at(1, 200, 200)}, 2);
  const GainMatrix g = compute_gains(s);
  const Assignment a = heuristic_assignment(s, g);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    PowerAllocation p(1, 1, 2), ref(1, 1, 2);
    p(0, 0, 0) = uniform(rng, 0, 0.5);
    p(0, 0, 1) = uniform(rng, 0, 0.5);
    ref(0, 0, 0) = uniform(rng, 0, 0.5);
    ref(0, 0, 1) = uniform(rng, 0, 0.5);
    CHECK(surrogate_ue_rate(0, a, p, ref, g, 1e-13) ==
          Approx(ue_total_rate(0, a, p, g, 1e-13)).epsilon(1e-12));
  }
}

TEST_CASE("surrogate is strictly loose for two UEs sharing a sub-channel")
{
  Scenario s = fleet_scenario(PlatformKind::Drone, 2, 1.0, 1);
  s.uavs[0].position = {100, 200};
  s.uavs[1].position = {300, 200};
  s.ues = {ue_at(1, 110, 200), ue_at(2, 290, 200)};
  const GainMatrix g = compute_gains(s);
  const Assignment a = heuristic_assignment(s, g);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    PowerAllocation p(2, 2, 1), ref(2, 2, 1);
    p(0, 0, 0) = uniform(rng, 1e-3, 1.0);
    p(1, 1, 0) = uniform(rng, 1e-3, 1.0);
    ref(0, 0, 0) = uniform(rng, 1e-3, 1.0);
    ref(1, 1, 0) = uniform(rng, 1e-3, 1.0);
    for (int u = 0; u < 2; ++u) {
      const double truth = ue_total_rate(u, a, p, g, 1e-13);
      const double bound = surrogate_ue_rate(u, a, p, ref, g, 1e-13);
      CHECK(bound <= truth + 1e-9);
      if (std::abs(p(1 - u, 1 - u, 0) - ref(1 - u, 1 - u, 0)) > 1e-2) {
        CHECK(truth - bound > 0.0);
      }
    }
  }
}

TEST_CASE("inner solve: single link, interior optimum matches golden section")
{
  // Gamma = 4e-9 (UE right under a 50 m drone), noise 1e-13, Pmax 1, Rth 5.
  const Scenario s = one_drone({ue_at(1, 200, 200)}, 1, 5.0);
  const GainMatrix g = compute_gains(s);
  REQUIRE(g(0, 0) == Approx(4e-9));
  const Assignment a = heuristic_assignment(s, g);

  const double snr_per_watt = 4e-9 / 1e-13;
  auto objective = [&](double p) { return std::log2(1.0 + p * snr_per_watt) / 5.0 - p; };
  const double p_floor = (std::pow(2.0, 5.0) - 1.0) / snr_per_watt;
  const double oracle = golden_max(objective, p_floor, 1.0);
  // stationarity: 1 / (ln2 * Rth) - sigma^2 / Gamma
  CHECK(oracle == Approx(1.0 / (std::log(2.0) * 5.0) - 2.5e-5).epsilon(1e-6));

  ScaState state{initial_powers(a, s), 0.0, 0};
  const InnerSolution inner = solve_inner(a, g, state, s);
  REQUIRE(inner.status == InnerStatus::Optimal);
  CHECK(inner.powers(0, 0, 0) == Approx(oracle).epsilon(1e-6));
  CHECK(inner.omega == Approx(std::log2(1.0 + oracle * snr_per_watt)).epsilon(1e-6));
  CHECK(inner.kkt_residual < 1e-6);
}

TEST_CASE("inner solve: budget binds at Rth 0.5")
{
  const Scenario s = one_drone({ue_at(1, 200, 200)}, 1, 0.5);
  const GainMatrix g = compute_gains(s);
  const Assignment a = heuristic_assignment(s, g);
  const InnerSolution inner = solve_inner(a, g, ScaState{initial_powers(a, s), 0.0, 0}, s);
  REQUIRE(inner.status == InnerStatus::Optimal);
  CHECK(inner.powers(0, 0, 0) == Approx(1.0).epsilon(1e-6));
  CHECK(inner.omega == Approx(15.287748446474637).epsilon(1e-6));
}

TEST_CASE("inner solve: threshold above the full-power rate is infeasible")
{
  // log2(1 + 1 * 4e4) = 15.29 < 20
  const Scenario s = one_drone({ue_at(1, 200, 200)}, 1, 20.0);
  const GainMatrix g = compute_gains(s);
  const Assignment a = heuristic_assignment(s, g);
  CHECK(solve_inner(a, g, ScaState{initial_powers(a, s), 0.0, 0}, s).status == InnerStatus::Infeasible);

  const SolveResult r = sca_power_allocation(a, g, s);
  CHECK_FALSE(r.feasible);
  // best effort: the max-min point spends the whole budget
  CHECK(r.omega == Approx(15.287748446474637).epsilon(1e-6));
}

TEST_CASE("inner solve: symmetric pair gets equal powers")
{
  const Scenario s = one_drone({ue_at(1, 150, 200), ue_at(2, 250, 200)}, 2, 3.0);
  const GainMatrix g = compute_gains(s);
  const Assignment a = heuristic_assignment(s, g);
  const InnerSolution inner = solve_inner(a, g, ScaState{initial_powers(a, s), 0.0, 0}, s);
  REQUIRE(inner.status == InnerStatus::Optimal);
  CHECK(inner.powers(0, 0, 0) == Approx(inner.powers(1, 0, 1)).epsilon(1e-6));
  const auto rates = ue_rates(a, inner.powers, g, 1e-13);
  CHECK(rates[0] == Approx(rates[1]).epsilon(1e-6));
}

TEST_CASE("max-min mode ignores power cost")
{
  const Scenario s = one_drone({ue_at(1, 150, 200), ue_at(2, 350, 300)}, 2, 0.5);
  const GainMatrix g = compute_gains(s);
  const Assignment a = heuristic_assignment(s, g);
  const InnerSolution inner = solve_inner(a, g, ScaState{initial_powers(a, s), 0.0, 0}, s, InnerMode::MaxMin);
  REQUIRE(inner.status == InnerStatus::Optimal);
  CHECK(inner.powers.total() == Approx(1.0).epsilon(1e-6));
  const auto rates = ue_rates(a, inner.powers, g, 1e-13);
  CHECK(rates[0] == Approx(rates[1]).epsilon(1e-6));
}

TEST_CASE("SCA without interference stops after at most two iterations")
{
  const Scenario s = one_drone({ue_at(1, 150, 200), ue_at(2, 300, 120), ue_at(3, 20, 390)}, 5, 2.0);
  const GainMatrix g = compute_gains(s);
  const Assignment a = heuristic_assignment(s, g);
  const SolveResult r = sca_power_allocation(a, g, s);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  const InnerSolution inner = solve_inner(a, g, ScaState{initial_powers(a, s), 0.0, 0}, s);
  CHECK(r.objective == Approx(objective_value(inner.omega, inner.powers, s)).epsilon(1e-7));
}

TEST_CASE("SCA ascent, feasibility of iterates and result invariants")
{
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const Interfering inst = interfering(seed, 6, 4);
    const SolveResult r = sca_power_allocation(inst.assignment, inst.gains, inst.scenario);
    for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
      CHECK(r.objective_history[i] >= r.objective_history[i - 1] - 1e-9);
    }
    check_power_invariants(inst.assignment, r.powers, inst.scenario);
    CHECK(r.objective == Approx(objective_value(r.omega, r.powers, inst.scenario)).epsilon(1e-12));
    if (r.feasible) {
      CHECK(r.omega >= inst.scenario.rate_threshold);
      for (double rate_u : r.ue_rates) {
        CHECK(rate_u >= r.omega - 1e-6);
      }
    }
  }
}

TEST_CASE("SCA is deterministic")
{
  const Interfering inst = interfering(5, 6, 3);
  const SolveResult a = sca_power_allocation(inst.assignment, inst.gains, inst.scenario);
  const SolveResult b = sca_power_allocation(inst.assignment, inst.gains, inst.scenario);
  CHECK(a.powers == b.powers);
  CHECK(a.objective_history == b.objective_history);
}

TEST_CASE("SCA rejects bad starting powers")
{
  const Interfering inst = interfering(2, 3, 2);
  PowerAllocation p = initial_powers(inst.assignment, inst.scenario);
  PowerAllocation over = p;
  over(0, inst.assignment.serving_uav(0), 0) += 5.0;
  CHECK_THROWS_AS(sca_power_allocation(inst.assignment, inst.gains, inst.scenario, over), std::invalid_argument);
  PowerAllocation negative = p;
  negative(0, inst.assignment.serving_uav(0), 0) = -0.1;
  CHECK_THROWS_AS(sca_power_allocation(inst.assignment, inst.gains, inst.scenario, negative), std::invalid_argument);
  PowerAllocation off(3, 2, 2);
  off(0, 1 - inst.assignment.serving_uav(0), 0) = 0.1;
  CHECK_THROWS_AS(sca_power_allocation(inst.assignment, inst.gains, inst.scenario, off), std::invalid_argument);
  PowerAllocation wrong(2, 2, 2);
  CHECK_THROWS_AS(sca_power_allocation(inst.assignment, inst.gains, inst.scenario, wrong), std::invalid_argument);
}

TEST_CASE("inner solutions meet the KKT contract")
{
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Interfering inst = interfering(seed, 4, 2);
    const ScaState state{initial_powers(inst.assignment, inst.scenario), 0.0, 0};
    const InnerSolution inner = solve_inner(inst.assignment, inst.gains, state, inst.scenario);
    if (inner.status == InnerStatus::Optimal) {
      CHECK(inner.kkt_residual < 1e-6);
      check_power_invariants(inst.assignment, inner.powers, inst.scenario);
      // The surrogate objective never drops below the expansion point's.
      const auto rates = ue_rates(inst.assignment, state.p_ref, inst.gains, 1e-13);
      const double omega_ref = *std::min_element(rates.begin(), rates.end());
      if (omega_ref >= inst.scenario.rate_threshold) {
        CHECK(inner.surrogate_objective >= objective_value(omega_ref, state.p_ref, inst.scenario) - 1e-9);
      }
    }
  }
}

TEST_CASE("oracle: three grid levels by hand")
{
  // rate(0.5 W) = log2(20001) = 14.2878, rate(1 W) = 15.2877; Rth = 5
  // objective(0.5) = 2.35756, objective(1) = 2.05755, p = 0 infeasible.
  const Scenario s = one_drone({ue_at(1, 200, 200)}, 1, 5.0);
  const double levels[] = {0.0, 0.5, 1.0};
  const OracleResult o = brute_force_oracle(s, levels);
  CHECK(o.solve.feasible);
  CHECK(o.solve.powers(0, 0, 0) == 0.5);
  CHECK(o.solve.objective == Approx(2.357556902499637).epsilon(1e-12));
  CHECK(o.candidates == 3);
}

TEST_CASE("oracle: infeasible threshold")
{
  const Scenario s = one_drone({ue_at(1, 200, 200)}, 1, 20.0);
  const OracleResult o = brute_force_oracle(s, uniform_power_grid(s));
  CHECK_FALSE(o.solve.feasible);
}

TEST_CASE("oracle: symmetric pair")
{
  const Scenario s = one_drone({ue_at(1, 150, 200), ue_at(2, 250, 200)}, 2, 3.0);
  const OracleResult o = brute_force_oracle(s, uniform_power_grid(s));
  REQUIRE(o.solve.feasible);
  CHECK(o.solve.ue_rates[0] == Approx(o.solve.ue_rates[1]));
  CHECK(o.solve.powers.ue_total(0) == Approx(o.solve.powers.ue_total(1)));
}

TEST_CASE("oracle: size guard")
{
  const Scenario s = one_drone({ue_at(1, 1, 1), ue_at(2, 2, 2), ue_at(3, 3, 3)}, 3);
  CHECK_THROWS_AS(brute_force_oracle(s, uniform_power_grid(s)), OracleSizeError);
  const Scenario ok = one_drone({ue_at(1, 1, 1)}, 1);
  const std::vector<double> seven(7, 0.1);
  CHECK_THROWS_AS(brute_force_oracle(ok, seven), OracleSizeError);
  CHECK_THROWS_AS(brute_force_oracle(ok, std::vector<double>{}), OracleSizeError);
}

TEST_CASE("oracle never beats a finer search of its own candidates")
{
  // With one UE the oracle is a 1-D grid search: it must pick the best level.
  const Scenario s = one_drone({ue_at(1, 320, 40)}, 1, 1.0);
  const auto levels = uniform_power_grid(s);
  const OracleResult o = brute_force_oracle(s, levels);
  const GainMatrix g = compute_gains(s);
  double best = -1e300;
  for (double p : levels) {
    const double r = std::log2(1.0 + p * g(0, 0) / 1e-13);
    if (r >= 1.0) {
      best = std::max(best, r / 1.0 - p);
    }
  }
  CHECK(o.solve.objective == Approx(best));
  // The SCA optimum of the same 1-UE problem is within one grid step.
  const SolveResult r = sca_power_allocation(heuristic_assignment(s, g), g, s);
  CHECK(r.objective >= o.solve.objective - 1e-9);
}

TEST_CASE("uniform grid")
{
  Scenario s = fleet_scenario(PlatformKind::Drone, 2, 1.0);
  s.uavs[1].max_power = 0.5;
  const auto levels = uniform_power_grid(s, 6);
  REQUIRE(levels.size() == 6);
  CHECK(levels.front() == 0.0);
  CHECK(levels.back() == 0.5);
  CHECK(levels[1] == Approx(0.1));
}
