#ifndef SKYHEAL_PLACEMENT_HPP
#define SKYHEAL_PLACEMENT_HPP

#include "skyheal/assignment.hpp"
#include "skyheal/sca_solver.hpp"
#include "skyheal/scenario.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace skyheal {

/// One candidate placement: a position per UAV.
using Particle = std::vector<Position2D>;

struct ParticleSet
{
  std::vector<Particle> particles;
  double radius = 0.0;
  Particle center;
  int iteration = 0;
};

/// Association, sub-channels and SCA powers for a fixed placement.
struct PipelineResult
{
  Particle positions;
  Assignment assignment;
  SolveResult solve;
  /// False when no exclusive sub-channel assignment exists.
  bool assignable = true;

  /// solve.objective when feasible, -inf otherwise.
  double score() const;
};

struct TraceEntry
{
  int iteration = 0;
  Particle positions;
  /// Sampling radius around `positions` for the following iteration.
  double radius = 0.0;
  /// Best objective found so far.
  double objective = 0.0;
};

struct PlacementOptions
{
  int particles = 20;
  double shrink = 0.5;
  double min_radius = 1.0;
  double stall_tolerance = 1e-4;
  int stall_window = 3;
  int max_iterations = 30;
  /// Re-run the SCA for every particle. When false, particles are scored
  /// with the incumbent assignment and powers at their positions.
  bool resolve_per_particle = true;
  /// Start each particle's SCA from the incumbent powers when its
  /// assignment equals the incumbent's.
  bool warm_start = true;
  int threads = 1;
  std::optional<std::uint64_t> seed; // default: scenario.rng_seed
  ScaOptions sca;
};

struct PlacementResult
{
  Particle positions;
  Assignment assignment;
  SolveResult solve;
  std::vector<TraceEntry> trace;
  int iterations = 0;
  /// Stopped by the stall window rather than the iteration cap.
  bool converged = false;
  bool feasible = false;
};

/// Centroids of a ceil(sqrt(D)) x ceil(D / ceil(sqrt(D))) grid over the
/// area, row-major, clamped into each UAV's bounds.
Particle init_sectors(const Scenario& scenario);

/// Half the diagonal of one sector cell.
double initial_radius(const Scenario& scenario);

/// L particles drawn uniformly from discs of `radius` around `centers`,
/// clamped to the UAV bounds. Particle 0 is `centers` itself.
ParticleSet sample_particles(const Scenario& scenario,
                             const Particle& centers,
                             double radius,
                             int count,
                             std::uint64_t seed);

/// Full pipeline at the given positions: gains, capacity-aware max-gain
/// association, round-robin sub-channels, SCA. Spare sub-channels go only
/// to UAVs where no other UAV uses them. With `compare_spares`, the SCA is
/// also run with every UAV taking all of its own spare sub-channels and the
/// better result is kept. `warm` supplies starting powers when its
/// assignment matches.
PipelineResult solve_at_positions(const Scenario& scenario,
                                  std::span<const Position2D> positions,
                                  const ScaOptions& options = {},
                                  const PipelineResult* warm = nullptr,
                                  bool compare_spares = true);

/// True objective of a particle as the search scores it; -inf when
/// infeasible.
double evaluate_particle(const Particle& particle, const Scenario& scenario, const ScaOptions& options = {});

/// New centers are the best particle; the radius shrinks by `factor`
/// but never below `floor`.
std::pair<Particle, double> shrink_realign(const Particle& best, double radius, double factor = 0.5, double floor = 1.0);

/// Particle search over UAV positions with shrinking sample discs.
/// Particles are scored on globally free spare sub-channels only; the final
/// placement is re-solved with compare_spares, and the last trace row
/// carries that result.
PlacementResult joint_optimize(const Scenario& scenario, const PlacementOptions& options = {});

} // namespace skyheal

#endif // SKYHEAL_PLACEMENT_HPP
