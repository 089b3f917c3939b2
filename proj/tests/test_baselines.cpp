/*
Copyright 2026 The mecsim Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mecsim/baselines.hpp"
#include "mecsim/scenario.hpp"
#include "mecsim/solver.hpp"
#include "test_util.hpp"

using namespace mecsim;
using namespace mecsim::testutil;

TEST_CASE("equal split baseline") {
  SUBCASE("closed forms") {
    const double band = 1e7, cap = 1e10;
    auto topo = make_topology({{1e-10, 5e5, 1e9, 0.5, 0},
                               {4e-10, 5e5, 1e9, 0.5, 0}},
                              1, cap, band);
    BaselineResult r = allocate_fixed(topo);
    CHECK(r.feasible);
    for (int i = 0; i < 2; ++i) {
      CHECK(r.allocation.x[i] == band / 2);
      CHECK(r.allocation.q[i] == cap / 2);
      CHECK(r.allocation.t[i] == doctest::Approx(0.5 - 1e9 / (cap / 2)));
    }
    // Same payload and time budget: energy scales as 1/h.
    CHECK(rel_diff(r.allocation.energy[0] / r.allocation.energy[1],
                   topo.users[1].gain / topo.users[0].gain) < 1e-12);
  }
  SUBCASE("deadline break is reported per user") {
    // Equal compute split starves the heavy user.
    auto topo = make_topology({{1e-10, 5e5, 1e9, 0.5, 0},
                               {1e-10, 5e5, 4.6e10, 0.5, 0}},
                              1, 1e11);
    BaselineResult r = allocate_fixed(topo);
    CHECK_FALSE(r.feasible);
    REQUIRE(r.infeasible_users.size() == 1);
    CHECK(r.infeasible_users[0] == 1);
    CHECK(std::isinf(r.total_energy));
  }
}

TEST_CASE("single-knob baselines") {
  ScenarioSpec spec;
  spec.users = 12;
  spec.stations = 3;
  spec.seed = 321;

  SUBCASE("optimized side helps, fixed side binds") {
    for (std::uint64_t trial = 0; trial < 8; ++trial) {
      const Topology topo = generate(spec, trial);
      BaselineResult fixed = allocate_fixed(topo);
      BaselineResult fb = allocate_fixed_bandwidth(topo);
      BaselineResult fc = allocate_fixed_computing(topo);
      if (!fixed.feasible) continue;
      // Each optimizes over a set containing the equal-split point.
      CHECK(fb.total_energy <= fixed.total_energy * (1.0 + 1e-9));
      CHECK(fc.total_energy <= fixed.total_energy * (1.0 + 1e-9));
      // Budgets hold exactly by construction.
      double sum_x = 0.0;
      for (double v : fb.allocation.x) sum_x += v;
      CHECK(rel_diff(sum_x, topo.bandwidth_hz) < 1e-12);
      for (const StationRecord& st : topo.stations) {
        if (st.users.empty()) continue;
        double load = 0.0;
        for (int i : st.users) load += fb.allocation.q[i];
        CHECK(std::abs(load - st.capacity) / st.capacity < 1e-6);
      }
    }
  }
  SUBCASE("single-user stations make the compute pass trivial") {
    // One user per station: the optimized compute split hands each user the
    // whole server, which is exactly the equal split.
    auto topo = make_topology({{1e-10, 5e5, 1e9, 0.5, 0},
                               {3e-11, 7e5, 2e9, 0.5, 1},
                               {2e-10, 4e5, 1.5e9, 0.5, 2}},
                              3, 1e10);
    BaselineResult fixed = allocate_fixed(topo);
    BaselineResult fb = allocate_fixed_bandwidth(topo);
    for (int i = 0; i < 3; ++i) {
      CHECK(rel_diff(fb.allocation.q[i], fixed.allocation.q[i]) < 1e-7);
      CHECK(rel_diff(fb.allocation.t[i], fixed.allocation.t[i]) < 1e-7);
    }
    CHECK(rel_diff(fb.total_energy, fixed.total_energy) < 1e-7);
  }
  SUBCASE("symmetric instance collapses every baseline to the same point") {
    auto topo = make_topology({{1e-10, 5e5, 1e9, 0.5, 0},
                               {1e-10, 5e5, 1e9, 0.5, 1}},
                              2, 1e10);
    const double e_fixed = allocate_fixed(topo).total_energy;
    CHECK(rel_diff(allocate_fixed_bandwidth(topo).total_energy, e_fixed) <
          1e-9);
    CHECK(rel_diff(allocate_fixed_computing(topo).total_energy, e_fixed) <
          1e-9);
    CHECK(rel_diff(allocate_fixed_bandwidth_per_bs(topo).total_energy,
                   e_fixed) < 1e-9);
    CHECK(rel_diff(solve_joint(topo).report.total_energy, e_fixed) < 1e-9);
  }
}

TEST_CASE("per-station band budget baseline") {
  SUBCASE("one station makes the restriction vacuous") {
    ScenarioSpec spec;
    spec.users = 6;
    spec.stations = 1;
    spec.seed = 11;
    const Topology topo = generate(spec, 0);
    BaselineResult r = allocate_fixed_bandwidth_per_bs(topo);
    SolveResult joint = solve_joint(topo);
    CHECK(rel_diff(r.total_energy, joint.report.total_energy) < 1e-9);
  }
  SUBCASE("station budgets hold exactly") {
    ScenarioSpec spec;
    spec.users = 12;
    spec.stations = 3;
    spec.seed = 77;
    const Topology topo = generate(spec, 0);
    BaselineResult r = allocate_fixed_bandwidth_per_bs(topo);
    REQUIRE(r.feasible);
    for (const StationRecord& st : topo.stations) {
      double sum = 0.0;
      for (int i : st.users) sum += r.allocation.x[i];
      if (!st.users.empty())
        CHECK(rel_diff(sum, topo.bandwidth_hz / 3) < 1e-9);
    }
  }
}

TEST_CASE("joint solution dominates every baseline") {
  ScenarioSpec spec;
  spec.users = 16;
  spec.stations = 4;
  spec.seed = 5150;
  int checked = 0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const Topology topo = generate(spec, trial);
    BaselineResult fixed = allocate_fixed(topo);
    if (!fixed.feasible) continue;
    const double joint = solve_joint(topo).report.total_energy;
    CHECK(joint <= fixed.total_energy * (1.0 + 1e-9));
    CHECK(joint <= allocate_fixed_bandwidth(topo).total_energy * (1.0 + 1e-9));
    CHECK(joint <=
          allocate_fixed_bandwidth_per_bs(topo).total_energy * (1.0 + 1e-9));
    CHECK(joint <= allocate_fixed_computing(topo).total_energy * (1.0 + 1e-9));
    ++checked;
  }
  CHECK(checked >= 8);
}
