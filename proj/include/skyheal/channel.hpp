#ifndef SKYHEAL_CHANNEL_HPP
#define SKYHEAL_CHANNEL_HPP

#include "skyheal/scenario.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace skyheal {

struct Assignment;

/// U x D channel power gains. Frequency-flat: one gain per (UE, UAV) pair
/// serves every sub-channel.
class GainMatrix
{
public:
  GainMatrix() = default;
  GainMatrix(int num_ues, int num_uavs)
    : m_ues(num_ues), m_uavs(num_uavs), m_gains(static_cast<std::size_t>(num_ues) * num_uavs, 0.0)
  {}

  int num_ues() const { return m_ues; }
  int num_uavs() const { return m_uavs; }

  double operator()(int u, int d) const { return m_gains[index(u, d)]; }
  double& operator()(int u, int d) { return m_gains[index(u, d)]; }

private:
  std::size_t index(int u, int d) const { return static_cast<std::size_t>(u) * m_uavs + d; }

  int m_ues = 0;
  int m_uavs = 0;
  std::vector<double> m_gains;
};

/// Downlink power p[u][d][m] in watts, stored densely.
class PowerAllocation
{
public:
  PowerAllocation() = default;
  PowerAllocation(int num_ues, int num_uavs, int num_subchannels)
    : m_ues(num_ues),
      m_uavs(num_uavs),
      m_channels(num_subchannels),
      m_power(static_cast<std::size_t>(num_ues) * num_uavs * num_subchannels, 0.0)
  {}

  int num_ues() const { return m_ues; }
  int num_uavs() const { return m_uavs; }
  int num_subchannels() const { return m_channels; }

  double operator()(int u, int d, int m) const { return m_power[index(u, d, m)]; }
  double& operator()(int u, int d, int m) { return m_power[index(u, d, m)]; }

  std::span<const double> values() const { return m_power; }
  std::span<double> values() { return m_power; }

  double total() const;
  double uav_total(int d) const;
  double ue_total(int u) const;

  bool operator==(const PowerAllocation&) const = default;

private:
  std::size_t index(int u, int d, int m) const
  {
    return (static_cast<std::size_t>(u) * m_uavs + d) * m_channels + m;
  }

  int m_ues = 0;
  int m_uavs = 0;
  int m_channels = 0;
  std::vector<double> m_power;
};

/// 3D distance between a UAV at its altitude and a ground UE.
double distance(const UavPlatform& uav, const UeTerminal& ue);

/// LoS free-space gain ref_gain * (ref_distance / distance)^2.
double channel_gain(const UavPlatform& uav, const UeTerminal& ue, const ChannelParams& params);

GainMatrix compute_gains(const Scenario& scenario);

/// Gains with the UAVs moved to `positions` (one per UAV, scenario order).
GainMatrix compute_gains(const Scenario& scenario, std::span<const Position2D> positions);

/// Interference seen by UE u on sub-channel m: every other UE's power on m,
/// from any UAV, weighted by that UAV's gain towards u.
double interference(int u, int m, const PowerAllocation& powers, const GainMatrix& gains);

double sinr(int u, int d, int m, const PowerAllocation& powers, const GainMatrix& gains, double noise);

/// Shannon rate log2(1 + sinr) in bits/s/Hz.
double rate(double sinr_value);

/// Sum over the UE's associated UAV and allocated sub-channels.
double ue_total_rate(int u,
                     const Assignment& assignment,
                     const PowerAllocation& powers,
                     const GainMatrix& gains,
                     double noise);

std::vector<double> ue_rates(const Assignment& assignment,
                             const PowerAllocation& powers,
                             const GainMatrix& gains,
                             double noise);

} // namespace skyheal

#endif // SKYHEAL_CHANNEL_HPP
