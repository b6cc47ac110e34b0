#ifndef SKYHEAL_SCA_SOLVER_HPP
#define SKYHEAL_SCA_SOLVER_HPP

#include "skyheal/assignment.hpp"
#include "skyheal/channel.hpp"
#include "skyheal/scenario.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace skyheal {

struct ScaOptions
{
  /// Outer stop: |objective(r+1) - objective(r)| below this.
  double tolerance = 1e-6;
  int max_iterations = 100;
  /// Starting power on every active tuple (W).
  double initial_power = 0.1;
  /// Barrier method stops once (#constraints / t) falls below this.
  double duality_gap = 1e-10;
  /// Try longer steps (2x, 4x, ...) along each SCA move and keep the best
  /// feasible one by true objective.
  bool extrapolate = true;
};

struct SolveResult
{
  /// Achieved minimum UE rate (bits/s/Hz).
  double omega = 0.0;
  PowerAllocation powers;
  std::vector<double> ue_rates;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool feasible = false;
  /// True objective of the starting point and of every inner solution
  /// computed while the rate floor was enforced, in order.
  std::vector<double> objective_history;
  /// Inner solves spent maximizing the minimum rate alone because the
  /// surrogate could not meet the rate floor.
  int max_min_iterations = 0;
};

/// Expansion point of the current surrogate.
struct ScaState
{
  PowerAllocation p_ref;
  double omega_ref = 0.0;
  int iteration = 0;
};

enum class InnerMode
{
  /// Full convexified subproblem, including omega >= R^th.
  RateFloor,
  /// Maximize omega alone, no rate floor and no power term.
  MaxMin
};

enum class InnerStatus
{
  Optimal,
  Infeasible
};

struct InnerSolution
{
  InnerStatus status = InnerStatus::Infeasible;
  PowerAllocation powers;
  double omega = 0.0;
  /// Objective of the convex subproblem at the returned point.
  double surrogate_objective = 0.0;
  /// Max of stationarity, dual infeasibility and complementarity at the
  /// returned point, with multipliers refit by least squares on the
  /// near-active constraints. Stationarity is relative to the cost gradient.
  double kkt_residual = 0.0;
  int newton_steps = 0;
};

/// sum_d P^max_d, the power normalizer of the objective.
double total_budget(const Scenario& scenario);

/// omega / R^th - sum(p) / sum_d P^max_d.
double objective_value(double omega, const PowerAllocation& powers, const Scenario& scenario);

/// Concave lower bound on ue_total_rate(u, ...) obtained by linearizing the
/// interference log-term around p_ref. Tight at p == p_ref. Only the
/// sub-channels allocated to u contribute; on all others the true rate is
/// identically zero.
double surrogate_ue_rate(int u,
                         const Assignment& assignment,
                         const PowerAllocation& powers,
                         const PowerAllocation& p_ref,
                         const GainMatrix& gains,
                         double noise);

/// 0.1 W (or `level`) on every active tuple, scaled down per UAV to fit its
/// budget.
PowerAllocation initial_powers(const Assignment& assignment, const Scenario& scenario, double level = 0.1);

/// Solves one convexified subproblem around state.p_ref.
InnerSolution solve_inner(const Assignment& assignment,
                          const GainMatrix& gains,
                          const ScaState& state,
                          const Scenario& scenario,
                          InnerMode mode = InnerMode::RateFloor,
                          const ScaOptions& options = {});

/// Successive convex approximation of the power allocation for a fixed
/// placement and assignment. Throws std::invalid_argument when p_init is
/// outside the budget/coupling constraints.
SolveResult sca_power_allocation(const Assignment& assignment,
                                 const GainMatrix& gains,
                                 const Scenario& scenario,
                                 const std::optional<PowerAllocation>& p_init = std::nullopt,
                                 const ScaOptions& options = {});

/// Evaluates a fixed power allocation with true rates.
SolveResult evaluate_allocation(const Assignment& assignment,
                                const GainMatrix& gains,
                                const Scenario& scenario,
                                const PowerAllocation& powers);

class OracleSizeError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

struct OracleResult
{
  SolveResult solve;
  Assignment assignment;
  long long candidates = 0;
};

/// Exhaustive search over every association, every exclusive sub-channel
/// allocation, and every grid power on the active tuples, at the UAV
/// positions stored in the scenario. Limited to U <= 4, D <= 2, M <= 2 and
/// at most 6 levels.
OracleResult brute_force_oracle(const Scenario& scenario, std::span<const double> power_grid_levels);

/// `count` evenly spaced levels from 0 to the smallest UAV budget.
std::vector<double> uniform_power_grid(const Scenario& scenario, int count = 6);

} // namespace skyheal

#endif // SKYHEAL_SCA_SOLVER_HPP
