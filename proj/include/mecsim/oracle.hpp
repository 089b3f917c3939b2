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

#ifndef MECSIM_ORACLE_HPP
#define MECSIM_ORACLE_HPP

#include <cstdint>
#include <vector>

#include "mecsim/model.hpp"

namespace mecsim {

// Centralized reference solver for small instances. Deliberately shares no
// search machinery with the price-bisection solver: it runs projected
// gradient descent (spectral step + Armijo backtracking) on normalized
// (bandwidth share, compute share) coordinates, with exact clipped-shift
// projections onto the band simplex and, per station, onto the capacity
// simplex in load coordinates. Agreement between the two paths is evidence,
// not tautology.

struct OracleSettings {
  double tolerance = 1e-12;  // relative energy change considered stalled
  // Normalized stationarity target. Near the optimum the objective is flat
  // to rounding, so dispersions much below ~1e-6 are not reachable by a
  // monotone first-order method in double precision; the energy itself is
  // quadratically more accurate than the dispersion.
  double kkt_tol = 1e-6;
  int max_iterations = 200000;
  int restarts = 3;  // first start is the equal-split point
  std::uint64_t seed = 0x9e3779b97f4a7c15ull;
};

struct OracleResult {
  Allocation allocation;
  double energy = 0.0;
  bool converged = false;
  int iterations = 0;          // total over restarts
  double kkt_residual = 0.0;   // stationarity dispersion of the best point
  std::vector<double> restart_energies;
};

OracleResult solve_reference(const Topology& topology,
                             const OracleSettings& settings = {});

struct OracleGroupedResult {
  OracleResult base;
  std::vector<double> budgets;  // per-group band totals at the optimum
};

/// Reference solution under a frequency-reuse partition (groups share band
/// budgets that sum to the system band). Budget variables are eliminated
/// exactly: with the group sums free, the constraint reduces to the plain
/// band simplex, so the grouped optimum coincides with solve_reference and
/// the budgets are read off the optimal shares.
OracleGroupedResult solve_reference_grouped(
    const Topology& topology, const std::vector<std::vector<int>>& groups,
    const OracleSettings& settings = {});

}  // namespace mecsim

#endif  // MECSIM_ORACLE_HPP
