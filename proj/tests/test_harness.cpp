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
#include <fstream>
#include <sstream>

#include "mecsim/baselines.hpp"
#include "mecsim/harness.hpp"
#include "test_util.hpp"

using namespace mecsim;
using namespace mecsim::testutil;

namespace {

SweepSpec mini_sweep() {
  SweepSpec sweep;
  sweep.parameter = SweepParameter::kDataSize;
  sweep.values = {2.5e5, 5e5};
  sweep.trials = 2;
  sweep.algorithms = {Algorithm::kJoint, Algorithm::kFixed};
  sweep.base.users = 6;
  sweep.base.stations = 2;
  sweep.base.seed = 42;
  return sweep;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("names round-trip") {
  for (Algorithm a :
       {Algorithm::kJoint, Algorithm::kFixed, Algorithm::kFixedBandwidth,
        Algorithm::kFixedBandwidthPerBs, Algorithm::kFixedComputing,
        Algorithm::kReuse})
    CHECK(algorithm_from_string(to_string(a)) == a);
  for (SweepParameter p :
       {SweepParameter::kNone, SweepParameter::kDataSize,
        SweepParameter::kComputeNeed, SweepParameter::kDeadline,
        SweepParameter::kUsers, SweepParameter::kStations,
        SweepParameter::kUsersPerStation})
    CHECK(sweep_parameter_from_string(to_string(p)) == p);
  CHECK_THROWS(algorithm_from_string("nope"));
}

TEST_CASE("sweep values reshape the scenario") {
  ScenarioSpec base;
  CHECK(scenario_for_value(base, SweepParameter::kDataSize, 7e5)
            .data_bits.low == 7e5);
  const ScenarioSpec w = scenario_for_value(base, SweepParameter::kComputeNeed,
                                            3e9);
  CHECK(w.cycles.low == doctest::Approx(1e9));
  CHECK(w.cycles.high == doctest::Approx(5e9));
  CHECK(scenario_for_value(base, SweepParameter::kDeadline, 0.3).deadline_s ==
        0.3);
  CHECK(scenario_for_value(base, SweepParameter::kUsersPerStation, 8).users ==
        8 * base.stations);
}

TEST_CASE("single fixed trial carries the closed-form energy") {
  SweepSpec sweep;
  sweep.parameter = SweepParameter::kNone;
  sweep.values = {0.0};
  sweep.trials = 1;
  sweep.algorithms = {Algorithm::kFixed};
  sweep.base.users = 4;
  sweep.base.stations = 2;
  sweep.base.seed = 3;
  const auto rows = run_sweep(sweep);
  REQUIRE(rows.size() == 1);
  const Topology topo = generate(sweep.base, 0);
  CHECK(rows[0].energy_j == allocate_fixed(topo).total_energy);
  CHECK(rows[0].feasible);
  CHECK(rows[0].wall_ms == 0.0);
}

TEST_CASE("algorithms are paired on identical topologies") {
  SweepSpec sweep = mini_sweep();
  const auto rows = run_sweep(sweep);
  REQUIRE(rows.size() == 8);
  for (const TrialResult& r : rows) {
    if (r.algorithm != Algorithm::kJoint) continue;
    // Recompute the paired fixed row straight from the shared topology.
    const ScenarioSpec spec =
        scenario_for_value(sweep.base, sweep.parameter, r.sweep_value);
    const Topology topo = generate(spec, r.trial);
    for (const TrialResult& other : rows) {
      if (other.trial == r.trial && other.sweep_value == r.sweep_value &&
          other.algorithm == Algorithm::kFixed)
        CHECK(other.energy_j == allocate_fixed(topo).total_energy);
    }
    // Joint never loses to its paired baseline.
    for (const TrialResult& other : rows)
      if (other.trial == r.trial && other.sweep_value == r.sweep_value)
        CHECK(r.energy_j <= other.energy_j * (1.0 + 1e-9));
  }
}

TEST_CASE("summaries") {
  SUBCASE("single trial aggregates to itself") {
    std::vector<TrialResult> rows(1);
    rows[0].sweep_param = "L";
    rows[0].sweep_value = 1.0;
    rows[0].algorithm = Algorithm::kJoint;
    rows[0].energy_j = 0.25;
    rows[0].iterations = 3;
    rows[0].signaling_msgs = 12;
    const auto summary = summarize(rows);
    REQUIRE(summary.size() == 1);
    CHECK(summary[0].mean_energy_j == 0.25);
    CHECK(summary[0].std_energy_j == 0.0);
    CHECK(summary[0].mean_iterations == 3.0);
    CHECK(summary[0].trials_included == 1);
  }
  SUBCASE("two equal trials keep the value with zero spread") {
    std::vector<TrialResult> rows(2);
    for (int i = 0; i < 2; ++i) {
      rows[i].sweep_value = 1.0;
      rows[i].trial = i;
      rows[i].algorithm = Algorithm::kFixed;
      rows[i].energy_j = 0.5;
    }
    const auto summary = summarize(rows);
    REQUIRE(summary.size() == 1);
    CHECK(summary[0].mean_energy_j == 0.5);
    CHECK(summary[0].std_energy_j == 0.0);
  }
  SUBCASE("ten-row fixture recomputed by hand") {
    // Two algorithms x five trials at one sweep point. Trial 4 is
    // infeasible for the baseline, so it is excluded for both algorithms:
    //   joint energies over trials 0..3:  1, 2, 3, 4   -> mean 2.5
    //   sample std: sqrt(((1.5)^2+(0.5)^2+(0.5)^2+(1.5)^2)/3) = sqrt(5/3)
    //   fixed energies over trials 0..3:  2, 4, 6, 8   -> mean 5, std sqrt(20/3)
    std::vector<TrialResult> rows;
    for (int trial = 0; trial < 5; ++trial) {
      TrialResult joint;
      joint.sweep_value = 7.0;
      joint.trial = trial;
      joint.algorithm = Algorithm::kJoint;
      joint.energy_j = 1.0 + trial;
      joint.iterations = 2;
      joint.signaling_msgs = 10 * (trial + 1);
      rows.push_back(joint);

      TrialResult fixed = joint;
      fixed.algorithm = Algorithm::kFixed;
      fixed.energy_j = 2.0 * (1.0 + trial);
      fixed.signaling_msgs = 0;
      if (trial == 4) {
        fixed.feasible = false;
        fixed.energy_j = std::numeric_limits<double>::infinity();
      }
      rows.push_back(fixed);
    }
    const auto summary = summarize(rows);
    REQUIRE(summary.size() == 2);
    const SummaryRow& joint =
        summary[0].algorithm == Algorithm::kJoint ? summary[0] : summary[1];
    const SummaryRow& fixed =
        summary[0].algorithm == Algorithm::kFixed ? summary[0] : summary[1];
    CHECK(joint.trials_included == 4);
    CHECK(joint.trials_excluded == 1);
    CHECK(joint.mean_energy_j == doctest::Approx(2.5));
    CHECK(joint.std_energy_j == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(joint.mean_signaling_msgs == doctest::Approx(25.0));
    CHECK(fixed.trials_included == 4);
    CHECK(fixed.mean_energy_j == doctest::Approx(5.0));
    CHECK(fixed.std_energy_j == doctest::Approx(std::sqrt(20.0 / 3.0)));
  }
}

TEST_CASE("csv emission") {
  SUBCASE("empty results produce a bare header") {
    CHECK(results_csv({}) ==
          "sweep_param,sweep_value,trial,algorithm,energy_J,iterations,"
          "signaling_msgs,feasible,residual_bw,residual_comp,wall_ms\n");
  }
  SUBCASE("rows parse back") {
    const auto rows = run_sweep(mini_sweep());
    const std::string csv = results_csv(rows);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    int count = 0;
    while (std::getline(in, line)) {
      ++count;
      CHECK(std::count(line.begin(), line.end(), ',') == 10);
    }
    CHECK(count == static_cast<int>(rows.size()));
  }
  SUBCASE("repeated runs are byte-identical, workers included") {
    SweepSpec sweep = mini_sweep();
    const std::string once = results_csv(run_sweep(sweep));
    const std::string twice = results_csv(run_sweep(sweep));
    CHECK(once == twice);
    sweep.jobs = 4;
    CHECK(results_csv(run_sweep(sweep)) == once);
  }
  SUBCASE("golden mini-sweep") {
    const auto rows = run_sweep(mini_sweep());
    const std::string golden =
        read_file(std::string(MECSIM_TEST_DATA_DIR) +
                  "/golden_sweep_seed42.csv");
    CHECK(results_csv(rows) == golden);
  }
}

TEST_CASE("config parsing") {
  const char* text = R"json({
    "scenario": {
      "stations": 2, "users": 6, "radius_m": 150.0, "fading": "off",
      "bandwidth_hz": 5e6, "noise_dbm_per_hz": -174.0,
      "capacity_cps": 5e10, "data_bits": {"low": 1e5, "high": 2e5},
      "cycles": {"low": 5e8, "high": 1e9}, "deadline_s": 0.4, "seed": 9
    },
    "sweep": {
      "parameter": "D", "values": [0.3, 0.4, 0.5], "trials": 3,
      "algorithms": ["joint", "fixed_computing"], "epsilon": 1e-7,
      "epsilon_mode": "rel", "jobs": 2
    },
    "reuse_partition": [[0], [1]]
  })json";
  const SweepSpec sweep = load_sweep_config(text);
  CHECK(sweep.base.stations == 2);
  CHECK(sweep.base.users == 6);
  CHECK(sweep.base.fading == FadingMode::kOff);
  CHECK(sweep.base.data_bits.high == 2e5);
  CHECK(sweep.base.seed == 9);
  CHECK(sweep.parameter == SweepParameter::kDeadline);
  CHECK(sweep.values.size() == 3);
  CHECK(sweep.trials == 3);
  REQUIRE(sweep.algorithms.size() == 2);
  CHECK(sweep.algorithms[1] == Algorithm::kFixedComputing);
  CHECK(sweep.solve.epsilon == 1e-7);
  CHECK(sweep.solve.epsilon_mode == EpsilonMode::kRelative);
  CHECK(sweep.jobs == 2);
  REQUIRE(sweep.reuse_partition.size() == 2);

  CHECK_THROWS_AS(load_sweep_config("{oops"), std::invalid_argument);
  CHECK_THROWS_AS(load_sweep_config(R"({"sweep":{"epsilon_mode":"huh"}})"),
                  std::invalid_argument);
}

TEST_CASE("sweep input validation") {
  SweepSpec sweep = mini_sweep();
  sweep.values = {5e5, 2.5e5};  // unsorted
  CHECK_THROWS_AS(run_sweep(sweep), std::invalid_argument);
  sweep = mini_sweep();
  sweep.trials = 0;
  CHECK_THROWS_AS(run_sweep(sweep), std::invalid_argument);
  sweep = mini_sweep();
  sweep.algorithms = {Algorithm::kReuse};  // no partition given
  CHECK_THROWS_AS(run_sweep(sweep), std::invalid_argument);
}
