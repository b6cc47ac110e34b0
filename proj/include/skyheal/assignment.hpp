#ifndef SKYHEAL_ASSIGNMENT_HPP
#define SKYHEAL_ASSIGNMENT_HPP

#include "skyheal/channel.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace skyheal {

/// Serving UAV index (0-based) per UE. Encodes a psi matrix with exactly one
/// 1 per row.
using Association = std::vector<int>;

/// Binary association psi[u][d] and sub-channel allocation phi[u][d][m].
struct Assignment
{
  Assignment() = default;
  Assignment(int num_ues, int num_uavs, int num_subchannels)
    : ues(num_ues),
      uavs(num_uavs),
      channels(num_subchannels),
      psi_bits(static_cast<std::size_t>(num_ues) * num_uavs, 0),
      phi_bits(static_cast<std::size_t>(num_ues) * num_uavs * num_subchannels, 0)
  {}

  int num_ues() const { return ues; }
  int num_uavs() const { return uavs; }
  int num_subchannels() const { return channels; }

  bool psi(int u, int d) const { return psi_bits[static_cast<std::size_t>(u) * uavs + d] != 0; }
  bool phi(int u, int d, int m) const { return phi_bits[phi_index(u, d, m)] != 0; }
  void set_psi(int u, int d, bool v) { psi_bits[static_cast<std::size_t>(u) * uavs + d] = v; }
  void set_phi(int u, int d, int m, bool v) { phi_bits[phi_index(u, d, m)] = v; }

  /// True when the tuple can carry power, i.e. psi * phi = 1.
  bool active(int u, int d, int m) const { return psi(u, d) && phi(u, d, m); }

  /// Serving UAV of u, or -1 if none.
  int serving_uav(int u) const;
  std::vector<int> ues_of(int d) const;

  bool operator==(const Assignment&) const = default;

  int ues = 0;
  int uavs = 0;
  int channels = 0;
  std::vector<std::uint8_t> psi_bits;
  std::vector<std::uint8_t> phi_bits;

private:
  std::size_t phi_index(int u, int d, int m) const
  {
    return (static_cast<std::size_t>(u) * uavs + d) * channels + m;
  }
};

class InfeasibleAssignment : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Each UE to the UAV with the largest gain; ties go to the lowest index.
Association associate_max_gain(const Scenario& scenario, const GainMatrix& gains);

/// Max-gain association repaired so no UAV holds more demand than M
/// sub-channels. The overflowing UE with the largest gain ratio (best UAV
/// with spare capacity over current UAV) moves first.
Association associate_with_capacity(const Scenario& scenario,
                                     const GainMatrix& gains,
                                     std::span<const int> ue_demand = {});

/// What happens to sub-channels a UAV does not need for its UEs' demand.
enum class SpareChannels
{
  /// Only those no other UAV uses; keeps UAVs orthogonal when possible.
  GloballyFree,
  /// Every sub-channel the UAV itself leaves unused.
  AllUnused
};

/// Round-robin sub-channel allocation. With `exclusive`, each UAV's UEs
/// (ascending id, or index when `ue_ids` is empty) take ue_demand[u]
/// distinct sub-channels, starting at the index where the previous UAV
/// stopped (mod M). Sub-channels left unused by every UAV are then dealt
/// alternately to the UAVs, and round-robin to each UAV's UEs. Without
/// `exclusive`, UEs cycle through the M sub-channels from 0 and may share
/// them. An empty `ue_demand` means one sub-channel per UE.
Assignment assign_subchannels(const Association& association,
                              int num_uavs,
                              int num_subchannels,
                              std::span<const int> ue_demand = {},
                              bool exclusive = true,
                              std::span<const int> ue_ids = {},
                              SpareChannels spares = SpareChannels::GloballyFree);

/// Builds psi/phi in one step from a scenario and the given gains.
Assignment heuristic_assignment(const Scenario& scenario,
                                const GainMatrix& gains,
                                SpareChannels spares = SpareChannels::GloballyFree);

/// Structural invariants that do not depend on powers. Empty when valid.
std::vector<std::string> assignment_violations(const Assignment& assignment, bool exclusive);

enum class LinearizationBound
{
  PsiUpper,    // p <= psi * Pmax
  PhiUpper,    // p <= phi * Pmax
  ProductLower // p >= (psi + phi - 1) * Pmax
};

struct LinearizationViolation
{
  int ue = 0;
  int uav = 0;
  int subchannel = 0;
  LinearizationBound bound = LinearizationBound::PsiUpper;
  double excess = 0.0; // always > 0
};

/// Checks the three linear constraints that replace p <= psi*phi*Pmax for
/// every (u, d, m). `max_power` holds Pmax per UAV.
std::vector<LinearizationViolation> check_linearization(const Assignment& assignment,
                                                        const PowerAllocation& powers,
                                                        std::span<const double> max_power,
                                                        double tolerance = 0.0);

} // namespace skyheal

#endif // SKYHEAL_ASSIGNMENT_HPP
