#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skyheal/assignment.hpp"
#include "skyheal/channel.hpp"
#include "skyheal/placement.hpp"
#include "skyheal/rng.hpp"
#include "support.hpp"

#include <algorithm>
#include <numeric>

using namespace skyheal;
using testing::fleet_scenario;
using testing::ue_at;

namespace {

int channels_of(const Assignment& a, int u)
{
  int n = 0;
  for (int d = 0; d < a.num_uavs(); ++d) {
    for (int m = 0; m < a.num_subchannels(); ++m) {
      n += a.phi(u, d, m);
    }
  }
  return n;
}

} // namespace

TEST_CASE("one UAV takes every UE")
{
  Scenario s = generate_random_scenario(fleet_scenario(PlatformKind::Helikite, 1, 2.25), 10, 4);
  const Association a = associate_max_gain(s, compute_gains(s));
  CHECK(std::all_of(a.begin(), a.end(), [](int d) { return d == 0; }));
}

TEST_CASE("ties go to the lowest UAV index")
{
  Scenario s = fleet_scenario(PlatformKind::Drone, 2, 1.0);
  s.uavs[0].position = {100, 200};
  s.uavs[1].position = {300, 200};
  s.ues = {ue_at(1, 200, 123)};
  CHECK(associate_max_gain(s, compute_gains(s))[0] == 0);
}

TEST_CASE("four sector drones: each UE goes to its nearest drone")
{
  Scenario t = fleet_scenario(PlatformKind::Drone, 4, 1.0);
  const Particle centers = init_sectors(t);
  for (int d = 0; d < 4; ++d) {
    t.uavs[d].position = centers[d];
  }
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scenario s = generate_random_scenario(t, 10, seed);
    const Association a = associate_max_gain(s, compute_gains(s));
    for (int u = 0; u < 10; ++u) {
      // brute force over squared horizontal distances (equal altitudes)
      int nearest = 0;
      double best = 1e300;
      for (int d = 0; d < 4; ++d) {
        const double dx = s.ues[u].position.x - s.uavs[d].position.x;
        const double dy = s.ues[u].position.y - s.uavs[d].position.y;
        if (dx * dx + dy * dy < best) {
          best = dx * dx + dy * dy;
          nearest = d;
        }
      }
      CHECK(a[u] == nearest);
    }
  }
}

TEST_CASE("capacity repair moves the UE with the smallest gain loss")
{
  // Three UEs near UAV 0 but only 2 sub-channels each.
  Scenario s = fleet_scenario(PlatformKind::Drone, 2, 1.0, 2);
  s.uavs[0].position = {0, 0};
  s.uavs[1].position = {400, 0};
  s.ues = {ue_at(1, 10, 0), ue_at(2, 150, 0), ue_at(3, 20, 0)};
  const GainMatrix g = compute_gains(s);
  CHECK(associate_max_gain(s, g) == Association{0, 0, 0});
  CHECK(associate_with_capacity(s, g) == Association{0, 1, 0});
  CHECK(assignment_violations(heuristic_assignment(s, g), true).empty());

  s.exclusive_subchannels = false;
  CHECK(associate_with_capacity(s, g) == Association{0, 0, 0});
}

TEST_CASE("capacity repair prefers the UE that is nearly as close to the other UAV")
{
  // Both UEs prefer UAV 0, one sub-channel each. Gain ratios UAV1/UAV0:
  // UE 1 (2500+4401.94)/(2500+8569.80) = 0.6235, UE 2
  // (2500+17003.65)/(2500+58419.61) = 0.3202, so UE 1 moves even though
  // its link to UAV 0 is the stronger one.
  Scenario s = fleet_scenario(PlatformKind::Drone, 2, 1.0, 1);
  s.uavs[0].position = {140.7, 209.8};
  s.uavs[1].position = {248.4, 290.1};
  s.ues = {ue_at(1, 207.0, 207.3), ue_at(2, 12.9, 235.7)};
  const GainMatrix g = compute_gains(s);
  CHECK(associate_max_gain(s, g) == Association{0, 0});
  CHECK(g(0, 1) / g(0, 0) == doctest::Approx(0.6234927460297386));
  CHECK(g(1, 1) / g(1, 0) == doctest::Approx(0.32015388805016964));
  CHECK(associate_with_capacity(s, g) == Association{1, 0});
}

TEST_CASE("capacity repair fails when nothing has room")
{
  Scenario s = fleet_scenario(PlatformKind::Drone, 1, 1.0, 2);
  s.ues = {ue_at(1, 0, 0), ue_at(2, 1, 0), ue_at(3, 2, 0)};
  CHECK_THROWS_AS(associate_with_capacity(s, compute_gains(s)), InfeasibleAssignment);
}

TEST_CASE("round-robin examples")
{
  SUBCASE("2 UEs, M=2")
  {
    const Assignment a = assign_subchannels({0, 0}, 1, 2);
    CHECK(a.phi(0, 0, 0));
    CHECK_FALSE(a.phi(0, 0, 1));
    CHECK(a.phi(1, 0, 1));
    CHECK_FALSE(a.phi(1, 0, 0));
  }
  SUBCASE("1 UE, M=3 takes everything")
  {
    const Assignment a = assign_subchannels({0}, 1, 3);
    CHECK(channels_of(a, 0) == 3);
  }
  SUBCASE("3 UEs on one UAV with M=2")
  {
    CHECK_THROWS_AS(assign_subchannels({0, 0, 0}, 1, 2), InfeasibleAssignment);
  }
  SUBCASE("leftovers are dealt in order")
  {
    const Assignment a = assign_subchannels({0, 0}, 1, 5);
    // UE0: 0, 2, 4; UE1: 1, 3
    for (int m = 0; m < 5; ++m) {
      CHECK(a.phi(0, 0, m) == (m % 2 == 0));
      CHECK(a.phi(1, 0, m) == (m % 2 == 1));
    }
  }
  SUBCASE("demand")
  {
    const int demand[] = {2, 1};
    const Assignment a = assign_subchannels({0, 0}, 1, 4, demand);
    CHECK(a.phi(0, 0, 0));
    CHECK(a.phi(0, 0, 1));
    CHECK(a.phi(1, 0, 2));
    CHECK(a.phi(0, 0, 3)); // leftover
    const int too_much[] = {3, 2};
    CHECK_THROWS_AS(assign_subchannels({0, 0}, 1, 4, too_much), InfeasibleAssignment);
  }
  SUBCASE("the second UAV starts where the first stopped")
  {
    // UAV 0: UE 1 on m0. UAV 1 starts at m1: UE 0 on m1, UE 2 wraps to m0.
    // No sub-channel is free, so nothing is dealt.
    const Assignment a = assign_subchannels({1, 0, 1}, 2, 2);
    CHECK(a.phi(1, 0, 0));
    CHECK_FALSE(a.phi(1, 0, 1));
    CHECK(a.phi(0, 1, 1));
    CHECK_FALSE(a.phi(0, 1, 0));
    CHECK(a.phi(2, 1, 0));
    CHECK_FALSE(a.phi(2, 1, 1));
    CHECK(a.serving_uav(0) == 1);
    CHECK(a.ues_of(1) == std::vector<int>{0, 2});
  }
  SUBCASE("free sub-channels alternate between UAVs")
  {
    // UAV 0: UE 0 on m0; UAV 1: UE 1 on m1; free m2..m5 go to UAV 0, 1, 0, 1.
    const Assignment a = assign_subchannels({0, 1}, 2, 6);
    for (int m = 0; m < 6; ++m) {
      CHECK(a.phi(0, 0, m) == (m % 2 == 0));
      CHECK(a.phi(1, 1, m) == (m % 2 == 1));
    }
  }
  SUBCASE("an idle UAV gets nothing")
  {
    const Assignment a = assign_subchannels({1, 1}, 3, 3);
    CHECK(a.phi(0, 1, 0));
    CHECK(a.phi(1, 1, 1));
    CHECK(a.phi(0, 1, 2));
    CHECK(a.ues_of(0).empty());
    CHECK(a.ues_of(2).empty());
  }
  SUBCASE("reuse mode cycles and may share")
  {
    const Assignment a = assign_subchannels({0, 0, 0}, 1, 2, {}, false);
    CHECK(a.phi(0, 0, 0));
    CHECK(a.phi(1, 0, 1));
    CHECK(a.phi(2, 0, 0));
    CHECK(assignment_violations(a, false).empty());
    CHECK_FALSE(assignment_violations(a, true).empty());
  }
}

TEST_CASE("ordering follows UE ids, not list positions")
{
  const int ids[] = {7, 3};
  const Assignment a = assign_subchannels({0, 0}, 1, 2, {}, true, ids);
  CHECK(a.phi(1, 0, 0)); // id 3 first
  CHECK(a.phi(0, 0, 1));
}

TEST_CASE("heuristic assignment is permutation stable under the UE list order")
{
  Scenario t = fleet_scenario(PlatformKind::Drone, 4, 1.0);
  const Particle centers = init_sectors(t);
  for (int d = 0; d < 4; ++d) {
    t.uavs[d].position = centers[d];
  }
  std::mt19937_64 rng(17);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scenario s = generate_random_scenario(t, 10, seed);
    const Assignment a = heuristic_assignment(s, compute_gains(s));
    Scenario shuffled = s;
    std::shuffle(shuffled.ues.begin(), shuffled.ues.end(), rng);
    const Assignment b = heuristic_assignment(shuffled, compute_gains(shuffled));
    CHECK(assignment_violations(a, true).empty());
    for (int i = 0; i < 10; ++i) {
      const int u = static_cast<int>(std::find_if(s.ues.begin(), s.ues.end(),
                                                  [&](const UeTerminal& e) { return e.id == shuffled.ues[i].id; }) -
                                     s.ues.begin());
      for (int d = 0; d < 4; ++d) {
        CHECK(b.psi(i, d) == a.psi(u, d));
        for (int m = 0; m < 10; ++m) {
          CHECK(b.phi(i, d, m) == a.phi(u, d, m));
        }
      }
    }
    CHECK(heuristic_assignment(s, compute_gains(s)) == a);
  }
}

TEST_CASE("heuristic invariants over random scenarios")
{
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const int D = 1 + static_cast<int>(seed % 4);
    const int M = 3 + static_cast<int>(seed % 5);
    Scenario t = fleet_scenario(PlatformKind::Drone, D, 1.0, M);
    std::mt19937_64 rng(seed);
    for (UavPlatform& u : t.uavs) {
      u.position = {uniform(rng, 0, 400), uniform(rng, 0, 400)};
    }
    const Scenario s = generate_random_scenario(t, std::min(10, D * M), seed);
    const Assignment a = heuristic_assignment(s, compute_gains(s));
    CHECK(assignment_violations(a, true).empty());
    for (int u = 0; u < s.num_ues(); ++u) {
      CHECK(channels_of(a, u) >= 1);
      const int d = a.serving_uav(u);
      REQUIRE(d >= 0);
      bool usable = false;
      for (int m = 0; m < M; ++m) {
        usable = usable || a.active(u, d, m);
      }
      CHECK(usable);
    }
    // Every sub-channel is used by some UAV, at most once per UAV.
    for (int m = 0; m < M; ++m) {
      int users = 0;
      for (int d = 0; d < D; ++d) {
        int holders = 0;
        for (int u = 0; u < s.num_ues(); ++u) {
          holders += a.phi(u, d, m);
        }
        CHECK(holders <= 1);
        users += holders;
      }
      CHECK(users >= 1);
    }
    // When the total demand fits, UAVs never share a sub-channel.
    if (s.num_ues() <= M) {
      for (int m = 0; m < M; ++m) {
        int users = 0;
        for (int d = 0; d < D; ++d) {
          for (int u = 0; u < s.num_ues(); ++u) {
            users += a.phi(u, d, m);
          }
        }
        CHECK(users == 1);
      }
    }
    // With AllUnused, every used UAV hands out its whole spectrum.
    const Assignment all = heuristic_assignment(s, compute_gains(s), SpareChannels::AllUnused);
    CHECK(assignment_violations(all, true).empty());
    for (int d = 0; d < D; ++d) {
      if (all.ues_of(d).empty()) {
        continue;
      }
      for (int m = 0; m < M; ++m) {
        int holders = 0;
        for (int u = 0; u < s.num_ues(); ++u) {
          holders += all.phi(u, d, m);
        }
        CHECK(holders == 1);
      }
    }
  }
}

TEST_CASE("violations are reported")
{
  Assignment a(2, 2, 2);
  a.set_psi(0, 0, true);
  a.set_psi(0, 1, true);
  a.set_phi(1, 1, 0, true);
  const auto v = assignment_violations(a, true);
  // UE0: two UAVs and no channel; UE1: channel of an unassociated UAV, no UAV
  CHECK(v.size() == 4);
}

TEST_CASE("linearization: exhaustive binaries x 11 powers")
{
  const double pmax = 1.0;
  const double max_power[] = {pmax};
  for (int psi = 0; psi <= 1; ++psi) {
    for (int phi = 0; phi <= 1; ++phi) {
      for (int k = 0; k <= 10; ++k) {
        const double p_value = pmax * k / 10.0;
        Assignment a(1, 1, 1);
        a.set_psi(0, 0, psi == 1);
        a.set_phi(0, 0, 0, phi == 1);
        PowerAllocation p(1, 1, 1);
        p(0, 0, 0) = p_value;

        const auto all = check_linearization(a, p, max_power);
        bool upper_ok = true;
        for (const auto& v : all) {
          upper_ok = upper_ok && v.bound == LinearizationBound::ProductLower;
        }
        // Upper bounds hold exactly when p <= psi*phi*Pmax.
        CHECK(upper_ok == (p_value <= psi * phi * pmax));
        if (psi * phi == 0) {
          CHECK(upper_ok == (p_value == 0.0));
        }
        // The lower bound is only active at psi = phi = 1, where it pins p = Pmax.
        const bool lower_ok =
          std::none_of(all.begin(), all.end(), [](const auto& v) { return v.bound == LinearizationBound::ProductLower; });
        CHECK(lower_ok == (p_value >= (psi + phi - 1) * pmax));
      }
    }
  }
}

TEST_CASE("linearization examples")
{
  const double max_power[] = {1.0};
  Assignment a(1, 1, 1);
  a.set_psi(0, 0, true);
  a.set_phi(0, 0, 0, true);
  PowerAllocation p(1, 1, 1);
  p(0, 0, 0) = 1.0;
  CHECK(check_linearization(a, p, max_power).empty());

  Assignment b(1, 1, 1);
  b.set_phi(0, 0, 0, true);
  p(0, 0, 0) = 0.1;
  const auto v = check_linearization(b, p, max_power);
  REQUIRE(v.size() == 1);
  CHECK(v[0].bound == LinearizationBound::PsiUpper);
  CHECK(v[0].excess == doctest::Approx(0.1));
}
