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

#ifndef MECSIM_REUSE_HPP
#define MECSIM_REUSE_HPP

#include <vector>

#include "mecsim/solver.hpp"

namespace mecsim {

// Frequency-grouped spectrum sharing: stations are partitioned into F
// orthogonal groups; the stations of a group share a single band budget B_f
// and the budgets sum to the system band. With one group the problem
// collapses to the plain joint allocation.

struct ReusePlan {
  int factor = 0;                       // number of orthogonal groups
  std::vector<std::vector<int>> groups; // station indices, a partition
  std::vector<double> budgets;          // B_f per group, sums to B
};

struct ReuseDuals {
  double beta = 0.0;                  // price of the total band
  std::vector<double> lambda;         // per-station band price; 0 when idle
  double group_price_residual = 0.0;  // max_f |sum_j lambda_j - beta| / beta
};

struct StationSplit {
  std::vector<double> x;  // aligned with the station's user list
  double lambda = 0.0;
  bool converged = false;
};

/// Shares `budget` Hz among one station's users (the grouped counterpart of
/// the per-user bandwidth KKT, with the station's own budget). A station
/// with no users returns lambda = 0 and an empty split.
StationSplit station_bandwidth_split(const Topology& topology, int station,
                                     const std::vector<double>& t, double budget,
                                     const SolveOptions& opts = {});

struct GroupBudgetResult {
  double budget = 0.0;          // B_f found for the given beta
  std::vector<double> lambda;   // per station of the group, group order
  std::vector<int> user_ids;    // the group's users, station-list order
  std::vector<double> x;        // aligned with user_ids
  int probes = 0;               // budget evaluations
  double residual = 0.0;        // |sum lambda - beta| / beta
  int monotonicity_violations = 0;  // probe pairs where sum-lambda rose with B_f
  bool converged = false;
};

/// Finds the group budget at which the group's station prices sum to beta
/// (bisection inside (0, B); the price sum decreases as the budget grows,
/// which is asserted across probes and reported via
/// monotonicity_violations). Stations without users contribute a zero
/// price. A group with no users at all gets a zero budget.
GroupBudgetResult group_budget(const Topology& topology,
                               const std::vector<int>& group,
                               const std::vector<double>& t, double beta,
                               const SolveOptions& opts = {});

struct ReuseResult {
  Allocation allocation;
  ReusePlan plan;
  ReuseDuals duals;
  SolveReport report;
};

/// Joint allocation under a frequency-reuse partition: the compute passes
/// are unchanged, while each bandwidth pass finds beta such that the group
/// budgets sum to the system band, each group budget satisfying the
/// price-sum condition above. The partition must cover every station
/// exactly once.
ReuseResult allocate_with_reuse(const Topology& topology,
                                const std::vector<std::vector<int>>& groups,
                                const SolveOptions& opts = {});

}  // namespace mecsim

#endif  // MECSIM_REUSE_HPP
