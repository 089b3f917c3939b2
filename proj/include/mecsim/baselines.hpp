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

#ifndef MECSIM_BASELINES_HPP
#define MECSIM_BASELINES_HPP

#include <vector>

#include "mecsim/solver.hpp"

namespace mecsim {

// Reference allocators the joint solver is compared against. Each returns a
// feasible point of the same program (when it exists), so the joint energy
// is a lower bound on all of them.

struct BaselineResult {
  Allocation allocation;
  bool feasible = true;
  // Users whose deadline cannot be met under the baseline's equal compute
  // split; when non-empty, feasible is false and total energy is +inf.
  std::vector<int> infeasible_users;
  int iterations = 1;
  double total_energy = 0.0;
};

/// Equal bandwidth per user and equal compute share per station user.
BaselineResult allocate_fixed(const Topology& topology);

/// Equal bandwidth per user; compute shares optimized per station.
BaselineResult allocate_fixed_bandwidth(const Topology& topology,
                                        const SolveOptions& opts = {});

/// Equal band budget per station; full joint optimization inside each
/// station (per-station alternation run to its own fixed point).
BaselineResult allocate_fixed_bandwidth_per_bs(const Topology& topology,
                                               const SolveOptions& opts = {});

/// Equal compute share per station user; bandwidth optimized across all
/// users.
BaselineResult allocate_fixed_computing(const Topology& topology,
                                        const SolveOptions& opts = {});

}  // namespace mecsim

#endif  // MECSIM_BASELINES_HPP
