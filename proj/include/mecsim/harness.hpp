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

#ifndef MECSIM_HARNESS_HPP
#define MECSIM_HARNESS_HPP

#include <string>
#include <vector>

#include "mecsim/scenario.hpp"
#include "mecsim/solver.hpp"

namespace mecsim {

enum class Algorithm {
  kJoint,
  kFixed,
  kFixedBandwidth,
  kFixedBandwidthPerBs,
  kFixedComputing,
  kReuse,
};

std::string to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& name);

enum class SweepParameter {
  kNone,
  kDataSize,         // L: payload per user, bits
  kComputeNeed,      // W midpoint; draws become U[v/3, 5v/3]
  kDeadline,         // D, seconds
  kUsers,            // K
  kStations,         // M
  kUsersPerStation,  // K_j; users = value * stations
};

std::string to_string(SweepParameter parameter);
SweepParameter sweep_parameter_from_string(const std::string& name);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::kNone;
  std::vector<double> values;  // non-empty, sorted ascending
  int trials = 1;
  std::vector<Algorithm> algorithms{Algorithm::kJoint};
  ScenarioSpec base;
  SolveOptions solve;
  std::vector<std::vector<int>> reuse_partition;  // required for kReuse
  int jobs = 1;
  bool timing = false;  // wall_ms stays 0 unless enabled (byte-stable output)
};

struct TrialResult {
  std::string sweep_param;
  double sweep_value = 0.0;
  int trial = 0;
  Algorithm algorithm = Algorithm::kJoint;
  double energy_j = 0.0;
  int iterations = 0;
  long signaling_msgs = 0;
  bool feasible = true;
  double residual_bw = 0.0;
  double residual_comp = 0.0;
  double wall_ms = 0.0;
};

/// Runs the full (sweep value x trial x algorithm) grid. All algorithms at
/// one (value, trial) cell see the identical topology, and the same trial
/// index draws from the same seed stream across sweep values, so
/// comparisons are paired. Per-trial failures mark the affected rows
/// infeasible instead of aborting the sweep.
std::vector<TrialResult> run_sweep(const SweepSpec& sweep);

struct SummaryRow {
  std::string sweep_param;
  double sweep_value = 0.0;
  Algorithm algorithm = Algorithm::kJoint;
  int trials_included = 0;
  int trials_excluded = 0;  // cells dropped because some algorithm failed
  double mean_energy_j = 0.0;
  double std_energy_j = 0.0;  // sample standard deviation
  double mean_iterations = 0.0;
  double mean_signaling_msgs = 0.0;
};

/// Per (algorithm, sweep value) aggregates. A (value, trial) cell where any
/// algorithm is infeasible is excluded from every algorithm's averages so
/// the curves stay comparable.
std::vector<SummaryRow> summarize(const std::vector<TrialResult>& results);

std::string results_csv(const std::vector<TrialResult>& results);
std::string summary_csv(const std::vector<SummaryRow>& rows);

/// Writes results.csv and summary.csv under out_dir (created if needed).
void emit(const std::vector<TrialResult>& results, const std::string& out_dir);

/// Parses the JSON configuration (schema in the README); throws
/// std::invalid_argument with the offending key on malformed input.
SweepSpec load_sweep_config(const std::string& json_text);
SweepSpec load_sweep_config_file(const std::string& path);

/// Applies one sweep value to the base scenario.
ScenarioSpec scenario_for_value(const ScenarioSpec& base,
                                SweepParameter parameter, double value);

/// Single topology, single algorithm; used by run_sweep and the CLI.
TrialResult run_trial(const Topology& topology, Algorithm algorithm,
                      const SolveOptions& opts,
                      const std::vector<std::vector<int>>& reuse_partition,
                      bool timing);

}  // namespace mecsim

#endif  // MECSIM_HARNESS_HPP
