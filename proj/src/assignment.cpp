#include "skyheal/assignment.hpp"

#include <algorithm>
#include <numeric>

namespace skyheal {

namespace {

int demand_of(std::span<const int> ue_demand, int u)
{
  return ue_demand.empty() ? 1 : ue_demand[u];
}

} // namespace

int Assignment::serving_uav(int u) const
{
  for (int d = 0; d < uavs; ++d) {
    if (psi(u, d)) {
      return d;
    }
  }
  return -1;
}

std::vector<int> Assignment::ues_of(int d) const
{
  std::vector<int> out;
  for (int u = 0; u < ues; ++u) {
    if (psi(u, d)) {
      out.push_back(u);
    }
  }
  return out;
}

Association associate_max_gain(const Scenario& scenario, const GainMatrix& gains)
{
  Association association(scenario.num_ues(), 0);
  for (int u = 0; u < scenario.num_ues(); ++u) {
    int best = 0;
    for (int d = 1; d < scenario.num_uavs(); ++d) {
      if (gains(u, d) > gains(u, best)) {
        best = d;
      }
    }
    association[u] = best;
  }
  return association;
}

Association associate_with_capacity(const Scenario& scenario,
                                     const GainMatrix& gains,
                                     std::span<const int> ue_demand)
{
  Association association = associate_max_gain(scenario, gains);
  if (!scenario.exclusive_subchannels) {
    return association;
  }

  const int num_uavs = scenario.num_uavs();
  const int capacity = scenario.num_subchannels;
  std::vector<int> load(num_uavs, 0);
  for (int u = 0; u < scenario.num_ues(); ++u) {
    load[association[u]] += demand_of(ue_demand, u);
  }

  for (int d = 0; d < num_uavs; ++d) {
    while (load[d] > capacity) {
      // Move the UE that gives up the least: at high SNR the rate loss is
      // about log2 of the gain ratio to its best UAV with room.
      int move_ue = -1;
      int move_to = -1;
      for (int u = 0; u < scenario.num_ues(); ++u) {
        if (association[u] != d) {
          continue;
        }
        int target = -1;
        for (int j = 0; j < num_uavs; ++j) {
          if (j == d || load[j] + demand_of(ue_demand, u) > capacity) {
            continue;
          }
          if (target < 0 || gains(u, j) > gains(u, target)) {
            target = j;
          }
        }
        if (target < 0) {
          continue;
        }
        if (move_ue < 0 || gains(u, target) * gains(move_ue, d) > gains(move_ue, move_to) * gains(u, d)) {
          move_ue = u;
          move_to = target;
        }
      }
      if (move_ue < 0) {
        throw InfeasibleAssignment("no UAV has spare sub-channels for the overflow of UAV " +
                                   std::to_string(scenario.uavs[d].id));
      }
      load[d] -= demand_of(ue_demand, move_ue);
      load[move_to] += demand_of(ue_demand, move_ue);
      association[move_ue] = move_to;
    }
  }
  return association;
}

Assignment assign_subchannels(const Association& association,
                              int num_uavs,
                              int num_subchannels,
                              std::span<const int> ue_demand,
                              bool exclusive,
                              std::span<const int> ue_ids,
                              SpareChannels spares)
{
  const int num_ues = static_cast<int>(association.size());
  Assignment out(num_ues, num_uavs, num_subchannels);
  for (int u = 0; u < num_ues; ++u) {
    out.set_psi(u, association[u], true);
  }

  std::vector<std::vector<int>> served(num_uavs);
  for (int d = 0; d < num_uavs; ++d) {
    served[d] = out.ues_of(d);
    if (!ue_ids.empty()) {
      std::stable_sort(served[d].begin(), served[d].end(), [&](int a, int b) { return ue_ids[a] < ue_ids[b]; });
    }
  }

  if (!exclusive) {
    for (int d = 0; d < num_uavs; ++d) {
      int next = 0;
      for (int u : served[d]) {
        const int want = std::min(demand_of(ue_demand, u), num_subchannels);
        for (int k = 0; k < want; ++k) {
          out.set_phi(u, d, next % num_subchannels, true);
          ++next;
        }
      }
    }
    return out;
  }

  // Each UAV starts where the previous one stopped, so fleets whose total
  // demand fits in M end up on disjoint sub-channels.
  std::vector<int> owners(num_subchannels, 0);
  int offset = 0;
  for (int d = 0; d < num_uavs; ++d) {
    int needed = 0;
    for (int u : served[d]) {
      needed += demand_of(ue_demand, u);
    }
    if (needed > num_subchannels) {
      throw InfeasibleAssignment("UAV index " + std::to_string(d) + " needs " +
                                 std::to_string(needed) + " sub-channels but only " +
                                 std::to_string(num_subchannels) + " exist");
    }
    int next = offset;
    for (int u : served[d]) {
      for (int k = 0; k < demand_of(ue_demand, u); ++k) {
        const int m = next++ % num_subchannels;
        out.set_phi(u, d, m, true);
        ++owners[m];
      }
    }
    offset = (offset + needed) % num_subchannels;
  }

  if (spares == SpareChannels::AllUnused) {
    for (int d = 0; d < num_uavs; ++d) {
      std::size_t turn = 0;
      for (int m = 0; m < num_subchannels && !served[d].empty(); ++m) {
        bool taken = false;
        for (int u : served[d]) {
          taken = taken || out.phi(u, d, m);
        }
        if (!taken) {
          out.set_phi(served[d][turn++ % served[d].size()], d, m, true);
        }
      }
    }
    return out;
  }

  // Sub-channels nobody uses: alternate between UAVs, round-robin over
  // each UAV's UEs.
  std::vector<int> active_uavs;
  for (int d = 0; d < num_uavs; ++d) {
    if (!served[d].empty()) {
      active_uavs.push_back(d);
    }
  }
  if (active_uavs.empty()) {
    return out;
  }
  std::vector<std::size_t> turn(num_uavs, 0);
  std::size_t uav_turn = 0;
  for (int m = 0; m < num_subchannels; ++m) {
    if (owners[m] != 0) {
      continue;
    }
    const int d = active_uavs[uav_turn++ % active_uavs.size()];
    out.set_phi(served[d][turn[d]++ % served[d].size()], d, m, true);
  }
  return out;
}

Assignment heuristic_assignment(const Scenario& scenario, const GainMatrix& gains, SpareChannels spares)
{
  std::vector<int> ids;
  for (const UeTerminal& ue : scenario.ues) {
    ids.push_back(ue.id);
  }
  return assign_subchannels(associate_with_capacity(scenario, gains),
                            scenario.num_uavs(),
                            scenario.num_subchannels,
                            {},
                            scenario.exclusive_subchannels,
                            ids,
                            spares);
}

std::vector<std::string> assignment_violations(const Assignment& a, bool exclusive)
{
  std::vector<std::string> out;
  for (int u = 0; u < a.num_ues(); ++u) {
    int associated = 0;
    int channels = 0;
    for (int d = 0; d < a.num_uavs(); ++d) {
      associated += a.psi(u, d);
      for (int m = 0; m < a.num_subchannels(); ++m) {
        if (a.phi(u, d, m)) {
          ++channels;
          if (!a.psi(u, d)) {
            out.push_back("ue " + std::to_string(u) + " holds a sub-channel of an unassociated UAV");
          }
        }
      }
    }
    if (associated != 1) {
      out.push_back("ue " + std::to_string(u) + " associated with " + std::to_string(associated) +
                    " UAVs");
    }
    if (channels < 1) {
      out.push_back("ue " + std::to_string(u) + " has no sub-channel");
    }
  }
  if (exclusive) {
    for (int d = 0; d < a.num_uavs(); ++d) {
      for (int m = 0; m < a.num_subchannels(); ++m) {
        int holders = 0;
        for (int u = 0; u < a.num_ues(); ++u) {
          holders += a.phi(u, d, m);
        }
        if (holders > 1) {
          out.push_back("sub-channel " + std::to_string(m) + " of UAV " + std::to_string(d) +
                        " shared by " + std::to_string(holders) + " UEs");
        }
      }
    }
  }
  return out;
}

std::vector<LinearizationViolation> check_linearization(const Assignment& a,
                                                        const PowerAllocation& powers,
                                                        std::span<const double> max_power,
                                                        double tolerance)
{
  std::vector<LinearizationViolation> out;
  for (int u = 0; u < a.num_ues(); ++u) {
    for (int d = 0; d < a.num_uavs(); ++d) {
      const double psi = a.psi(u, d) ? 1.0 : 0.0;
      const double pmax = max_power[d];
      for (int m = 0; m < a.num_subchannels(); ++m) {
        const double phi = a.phi(u, d, m) ? 1.0 : 0.0;
        const double p = powers(u, d, m);
        if (const double e = p - psi * pmax; e > tolerance) {
          out.push_back({u, d, m, LinearizationBound::PsiUpper, e});
        }
        if (const double e = p - phi * pmax; e > tolerance) {
          out.push_back({u, d, m, LinearizationBound::PhiUpper, e});
        }
        if (const double e = (psi + phi - 1.0) * pmax - p; e > tolerance) {
          out.push_back({u, d, m, LinearizationBound::ProductLower, e});
        }
      }
    }
  }
  return out;
}

} // namespace skyheal
