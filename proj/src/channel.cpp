#include "skyheal/channel.hpp"

#include "skyheal/assignment.hpp"

#include <cassert>
#include <cmath>
#include <numeric>

namespace skyheal {

namespace {

double horizontal_sq(const Position2D& a, const Position2D& b)
{
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

} // namespace

double PowerAllocation::total() const
{
  return std::accumulate(m_power.begin(), m_power.end(), 0.0);
}

double PowerAllocation::uav_total(int d) const
{
  double sum = 0.0;
  for (int u = 0; u < m_ues; ++u) {
    for (int m = 0; m < m_channels; ++m) {
      sum += (*this)(u, d, m);
    }
  }
  return sum;
}

double PowerAllocation::ue_total(int u) const
{
  double sum = 0.0;
  for (int d = 0; d < m_uavs; ++d) {
    for (int m = 0; m < m_channels; ++m) {
      sum += (*this)(u, d, m);
    }
  }
  return sum;
}

double distance(const UavPlatform& uav, const UeTerminal& ue)
{
  return std::sqrt(uav.altitude * uav.altitude + horizontal_sq(uav.position, ue.position));
}

double channel_gain(const UavPlatform& uav, const UeTerminal& ue, const ChannelParams& params)
{
  const double d2 = uav.altitude * uav.altitude + horizontal_sq(uav.position, ue.position);
  return params.ref_gain * params.ref_distance * params.ref_distance / d2;
}

GainMatrix compute_gains(const Scenario& scenario)
{
  GainMatrix gains(scenario.num_ues(), scenario.num_uavs());
  for (int u = 0; u < scenario.num_ues(); ++u) {
    for (int d = 0; d < scenario.num_uavs(); ++d) {
      gains(u, d) = channel_gain(scenario.uavs[d], scenario.ues[u], scenario.channel);
    }
  }
  return gains;
}

GainMatrix compute_gains(const Scenario& scenario, std::span<const Position2D> positions)
{
  assert(static_cast<int>(positions.size()) == scenario.num_uavs());
  GainMatrix gains(scenario.num_ues(), scenario.num_uavs());
  for (int d = 0; d < scenario.num_uavs(); ++d) {
    UavPlatform moved = scenario.uavs[d];
    moved.position = positions[d];
    for (int u = 0; u < scenario.num_ues(); ++u) {
      gains(u, d) = channel_gain(moved, scenario.ues[u], scenario.channel);
    }
  }
  return gains;
}

double interference(int u, int m, const PowerAllocation& powers, const GainMatrix& gains)
{
  double sum = 0.0;
  for (int i = 0; i < powers.num_ues(); ++i) {
    if (i == u) {
      continue;
    }
    for (int j = 0; j < powers.num_uavs(); ++j) {
      sum += powers(i, j, m) * gains(u, j);
    }
  }
  return sum;
}

double sinr(int u, int d, int m, const PowerAllocation& powers, const GainMatrix& gains, double noise)
{
  const double signal = powers(u, d, m) * gains(u, d);
  if (signal == 0.0) {
    return 0.0;
  }
  return signal / (interference(u, m, powers, gains) + noise);
}

double rate(double sinr_value)
{
  return std::log2(1.0 + sinr_value);
}

double ue_total_rate(int u,
                     const Assignment& assignment,
                     const PowerAllocation& powers,
                     const GainMatrix& gains,
                     double noise)
{
  double total = 0.0;
  for (int d = 0; d < assignment.num_uavs(); ++d) {
    if (!assignment.psi(u, d)) {
      continue;
    }
    for (int m = 0; m < assignment.num_subchannels(); ++m) {
      if (assignment.phi(u, d, m)) {
        total += rate(sinr(u, d, m, powers, gains, noise));
      }
    }
  }
  return total;
}

std::vector<double> ue_rates(const Assignment& assignment,
                             const PowerAllocation& powers,
                             const GainMatrix& gains,
                             double noise)
{
  std::vector<double> rates(assignment.num_ues());
  for (int u = 0; u < assignment.num_ues(); ++u) {
    rates[u] = ue_total_rate(u, assignment, powers, gains, noise);
  }
  return rates;
}

} // namespace skyheal
