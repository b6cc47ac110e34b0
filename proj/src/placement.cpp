#include "skyheal/placement.hpp"

#include "skyheal/channel.hpp"
#include "skyheal/parallel.hpp"
#include "skyheal/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

namespace skyheal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Grid
{
  int cols = 1;
  int rows = 1;
};

Grid sector_grid(int num_uavs)
{
  Grid g;
  g.cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(num_uavs))));
  g.rows = (num_uavs + g.cols - 1) / g.cols;
  return g;
}

Position2D clamp_to(const UavPlatform& uav, Position2D p)
{
  p.x = std::clamp(p.x, uav.position_min.x, uav.position_max.x);
  p.y = std::clamp(p.y, uav.position_min.y, uav.position_max.y);
  return p;
}

std::uint64_t iteration_seed(std::uint64_t seed, int iteration)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// Scores a particle with fixed assignment and powers.
PipelineResult reuse_allocation(const Scenario& scenario, const Particle& particle, const PipelineResult& incumbent)
{
  PipelineResult out;
  out.positions = particle;
  out.assignment = incumbent.assignment;
  out.assignable = incumbent.assignable;
  if (!incumbent.assignable) {
    out.solve.feasible = false;
    return out;
  }
  const GainMatrix gains = compute_gains(scenario, particle);
  out.solve = evaluate_allocation(out.assignment, gains, scenario, incumbent.solve.powers);
  out.solve.converged = true;
  return out;
}

} // namespace

double PipelineResult::score() const
{
  return assignable && solve.feasible ? solve.objective : kNegInf;
}

Particle init_sectors(const Scenario& scenario)
{
  const int D = scenario.num_uavs();
  const Grid g = sector_grid(std::max(D, 1));
  const double w = (scenario.area_max.x - scenario.area_min.x) / g.cols;
  const double h = (scenario.area_max.y - scenario.area_min.y) / g.rows;
  Particle centers(D);
  for (int d = 0; d < D; ++d) {
    const int col = d % g.cols;
    const int row = d / g.cols;
    centers[d] = clamp_to(scenario.uavs[d],
                          {scenario.area_min.x + (col + 0.5) * w, scenario.area_min.y + (row + 0.5) * h});
  }
  return centers;
}

double initial_radius(const Scenario& scenario)
{
  const Grid g = sector_grid(std::max(scenario.num_uavs(), 1));
  const double w = (scenario.area_max.x - scenario.area_min.x) / g.cols;
  const double h = (scenario.area_max.y - scenario.area_min.y) / g.rows;
  return 0.5 * std::hypot(w, h);
}

ParticleSet sample_particles(const Scenario& scenario,
                             const Particle& centers,
                             double radius,
                             int count,
                             std::uint64_t seed)
{
  ParticleSet set;
  set.radius = radius;
  set.center = centers;
  set.particles.reserve(count);
  set.particles.push_back(centers);

  std::mt19937_64 engine(seed);
  for (int l = 1; l < count; ++l) {
    Particle particle(centers.size());
    for (std::size_t d = 0; d < centers.size(); ++d) {
      const double angle = 2.0 * std::numbers::pi * uniform01(engine);
      const double r = radius * std::sqrt(uniform01(engine));
      particle[d] = clamp_to(scenario.uavs[d],
                             {centers[d].x + r * std::cos(angle), centers[d].y + r * std::sin(angle)});
    }
    set.particles.push_back(std::move(particle));
  }
  return set;
}

PipelineResult solve_at_positions(const Scenario& scenario,
                                  std::span<const Position2D> positions,
                                  const ScaOptions& options,
                                  const PipelineResult* warm,
                                  bool compare_spares)
{
  PipelineResult out;
  out.positions.assign(positions.begin(), positions.end());
  const GainMatrix gains = compute_gains(scenario, positions);

  Scenario placed = scenario;
  for (int d = 0; d < placed.num_uavs(); ++d) {
    placed.uavs[d].position = positions[d];
  }
  try {
    out.assignment = heuristic_assignment(placed, gains);
  } catch (const InfeasibleAssignment&) {
    out.assignable = false;
    out.solve.feasible = false;
    out.solve.objective = kNegInf;
    return out;
  }

  std::optional<PowerAllocation> start;
  if (warm != nullptr && warm->assignable && warm->assignment == out.assignment) {
    start = warm->solve.powers;
  }
  out.solve = sca_power_allocation(out.assignment, gains, scenario, start, options);
  if (!compare_spares) {
    return out;
  }

  // Also let each UAV use the sub-channels its neighbours hold; keep
  // whichever ends higher.
  Assignment shared = heuristic_assignment(placed, gains, SpareChannels::AllUnused);
  if (shared == out.assignment) {
    return out;
  }
  start.reset();
  if (warm != nullptr && warm->assignable && warm->assignment == shared) {
    start = warm->solve.powers;
  }
  SolveResult retry = sca_power_allocation(shared, gains, scenario, start, options);
  const double kept = out.solve.feasible ? out.solve.objective : -std::numeric_limits<double>::infinity();
  const double other = retry.feasible ? retry.objective : -std::numeric_limits<double>::infinity();
  if (other > kept || (!out.solve.feasible && !retry.feasible && retry.objective > out.solve.objective)) {
    out.assignment = std::move(shared);
    out.solve = std::move(retry);
  }
  return out;
}

double evaluate_particle(const Particle& particle, const Scenario& scenario, const ScaOptions& options)
{
  return solve_at_positions(scenario, particle, options, nullptr, false).score();
}

std::pair<Particle, double> shrink_realign(const Particle& best, double radius, double factor, double floor)
{
  return {best, std::max(radius * factor, floor)};
}

PlacementResult joint_optimize(const Scenario& scenario, const PlacementOptions& options)
{
  validate(scenario);
  const std::uint64_t seed = options.seed.value_or(scenario.rng_seed);

  Particle centers = init_sectors(scenario);
  double radius = initial_radius(scenario);
  PipelineResult incumbent = solve_at_positions(scenario, centers, options.sca, nullptr, false);
  double best_score = incumbent.score();

  PlacementResult out;
  out.trace.push_back({0, centers, radius, best_score});

  int stalls = 0;
  int iteration = 0;
  while (iteration < options.max_iterations) {
    ++iteration;
    const ParticleSet set =
      sample_particles(scenario, centers, radius, std::max(options.particles, 1), iteration_seed(seed, iteration));

    const int L = static_cast<int>(set.particles.size());
    std::vector<PipelineResult> scored(L);
    parallel_for(L, options.threads, [&](int l) {
      // Particle 0 re-solves the incumbent at the current centers.
      if (options.resolve_per_particle || l == 0) {
        scored[l] = solve_at_positions(scenario,
                                       set.particles[l],
                                       options.sca,
                                       options.warm_start ? &incumbent : nullptr,
                                       false);
      } else {
        scored[l] = reuse_allocation(scenario, set.particles[l], incumbent);
      }
    });

    int pick = 0;
    for (int l = 1; l < L; ++l) {
      if (scored[l].score() > scored[pick].score()) {
        pick = l;
      }
    }

    const double previous = best_score;
    if (scored[pick].score() >= best_score) {
      incumbent = std::move(scored[pick]);
      best_score = incumbent.score();
      if (!options.resolve_per_particle && pick != 0) {
        // Scored with stale powers; re-solve so the incumbent carries an
        // allocation that fits its positions. Starting from the stale
        // powers, the SCA cannot end lower.
        PipelineResult refreshed = solve_at_positions(scenario, incumbent.positions, options.sca,
                                                      options.warm_start ? &incumbent : nullptr, false);
        if (refreshed.score() >= best_score) {
          incumbent = std::move(refreshed);
          best_score = incumbent.score();
        }
      }
    }

    std::tie(centers, radius) = shrink_realign(incumbent.positions, radius, options.shrink, options.min_radius);
    out.trace.push_back({iteration, centers, radius, best_score});

    const bool improved = best_score - previous >= options.stall_tolerance;
    stalls = improved ? 0 : stalls + 1;
    if (stalls >= options.stall_window) {
      out.converged = true;
      break;
    }
  }

  // Final placement only: also try shared spare sub-channels.
  PipelineResult polished = solve_at_positions(scenario, incumbent.positions, options.sca, &incumbent, true);
  if (polished.score() > incumbent.score()) {
    incumbent = std::move(polished);
    out.trace.back().objective = incumbent.score();
  }

  out.iterations = iteration;
  out.positions = incumbent.positions;
  out.assignment = incumbent.assignment;
  out.solve = incumbent.solve;
  out.feasible = incumbent.assignable && incumbent.solve.feasible;
  return out;
}

} // namespace skyheal
