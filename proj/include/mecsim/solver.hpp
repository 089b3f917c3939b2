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

#ifndef MECSIM_SOLVER_HPP
#define MECSIM_SOLVER_HPP

#include <functional>
#include <string>
#include <vector>

#include "mecsim/model.hpp"

namespace mecsim {

/// Prices of the two coupling constraints: lambda for the shared band,
/// mu[j] for station j's compute capacity. Both strictly positive at any
/// returned solution of a station that has users.
struct DualState {
  double lambda = 0.0;
  std::vector<double> mu;
};

enum class EpsilonMode { kAbsolute, kRelative };

struct SolveOptions {
  double epsilon = 1e-6;  // stop once an alternation round improves less
  EpsilonMode epsilon_mode = EpsilonMode::kAbsolute;
  int max_outer = 1000;

  // Root-finding tolerances. Tighter than the reported-residual targets so
  // that per-step energy noise stays below the 1e-12 J monotonicity slack
  // asserted on solve trajectories.
  double inner_rel_width = 1e-13;    // per-user bisection interval, relative
  double bandwidth_rel_tol = 1e-12;  // |sum x - budget| / budget
  double compute_rel_tol = 1e-12;    // |load - capacity| / capacity
  double lambda_rel_width = 0.0;     // extra price-interval target (0 = off)
};

struct KktResiduals {
  double bandwidth_rel = 0.0;        // |sum x - B| / B
  std::vector<double> compute_rel;   // signed (load - C_j)/C_j per station
  double compute_rel_max = 0.0;      // max |compute_rel|
  double stationarity_x = 0.0;       // max normalized bandwidth-KKT residual
  double stationarity_t = 0.0;       // max normalized compute-KKT residual

  double max_normalized() const;
};

struct SolveReport {
  int iterations = 0;  // rounds until the energy-gap stop rule fired
  // Extra uncounted rounds that close the stationarity system below 1e-6
  // after the energy gap already met epsilon; the gap rule alone can stop
  // with the compute-side KKT still reflecting the final bandwidth move.
  int polish_rounds = 0;
  // Total energies in evaluation order: after the initial bandwidth pass,
  // then after each compute and bandwidth update. Non-increasing.
  std::vector<double> energy_trajectory;
  double total_energy = 0.0;
  KktResiduals residuals;
  DualState duals;
  long signaling_msgs = 0;  // price-probe rounds x station count
  bool converged = false;
  std::string message;
};

/// Bandwidth-KKT residual for one user at price lambda:
///   g(x) = (N0*t/h) * (2^z - z*ln2*2^z - 1) + lambda,  z = L/(t*x).
/// Strictly increasing in x; tends to lambda as x -> inf and to -inf as
/// x -> 0+.
double bandwidth_stationarity(double x, double t, const TaskSpec& task,
                              double gain, double noise_w_per_hz,
                              double lambda);

/// Compute-KKT residual for one user at station price mu:
///   f(t) = (N0*x/h) * (2^z - z*ln2*2^z - 1) + mu*W/(D-t)^2,  z = L/(x*t).
/// Strictly increasing on (0, D); tends to +inf at t -> D- when mu > 0 and
/// to -inf at t -> 0+.
double compute_stationarity(double t, double x, const TaskSpec& task,
                            double gain, double noise_w_per_hz, double mu);

/// Unique root of bandwidth_stationarity in x for a given price.
/// Brackets geometrically from the seed x0 = L/t, then bisects to
/// opts.inner_rel_width. Users with zero payload claim zero bandwidth.
/// Throws std::runtime_error if a bracket cannot be established.
double user_bandwidth_for_price(double t, const TaskSpec& task, double gain,
                                double noise_w_per_hz, double lambda,
                                const SolveOptions& opts = {});

/// Called once per price probe with the probe value and the per-station
/// sums of the candidate bandwidths; the per-station sums are exactly the
/// quantities the stations would exchange in a distributed deployment.
using BandwidthProbeObserver =
    std::function<void(double lambda, const std::vector<double>& station_sums)>;

struct BandwidthSplit {
  std::vector<double> x;  // aligned with user_ids
  double lambda = 0.0;
  int probes = 0;         // price evaluations, bracketing included
  double residual = 0.0;  // |sum x - budget| / budget at the returned point
  bool converged = false;
};

/// Shares `budget` Hz among the given users at fixed transmission times:
/// finds the price lambda at which the per-user KKT bandwidths sum to the
/// budget (expand-then-bisect from lambda = 1, or from price_seed when one
/// is known from a previous pass). t is indexed by global user id. An empty
/// selection returns lambda = 0 and no bandwidth; a selection with no
/// payload demand returns an equal split at lambda = 0.
BandwidthSplit split_bandwidth(const Topology& topology,
                               const std::vector<int>& user_ids,
                               const std::vector<double>& t, double budget,
                               const SolveOptions& opts = {},
                               const BandwidthProbeObserver* observer = nullptr,
                               double price_seed = 0.0);

/// Full-system bandwidth pass: split_bandwidth over every user with the
/// whole band as budget.
BandwidthSplit allocate_bandwidth(const Topology& topology,
                                  const std::vector<double>& t,
                                  const SolveOptions& opts = {},
                                  const BandwidthProbeObserver* observer = nullptr,
                                  double price_seed = 0.0);

struct ComputeSplit {
  std::vector<double> t;  // aligned with the station's user list
  std::vector<double> q;  // W/(D - t), computed without cancellation
  double mu = 0.0;
  int probes = 0;
  double residual = 0.0;  // |load - capacity| / capacity
  bool converged = false;
};

/// Shares station `station`'s compute capacity among its users at fixed
/// bandwidths: finds mu such that the per-user KKT times load the server
/// exactly. Throws std::domain_error if the station cannot meet its users'
/// deadlines (reporting the slack).
ComputeSplit allocate_compute(const Topology& topology, int station,
                              const std::vector<double>& x,
                              const SolveOptions& opts = {},
                              double price_seed = 0.0);

struct SolveResult {
  Allocation allocation;
  SolveReport report;
};

/// Joint allocation: seeds compute shares with initial_compute_split, then
/// alternates full compute and bandwidth passes until the energy gap of one
/// round drops below epsilon. The energy trajectory is non-increasing and
/// the fixed point is the global optimum of the underlying convex program.
SolveResult solve_joint(const Topology& topology, const SolveOptions& opts = {});

/// Post-hoc residuals of an allocation against the KKT system priced by
/// `duals`. Stationarity residuals are normalized by the magnitude of the
/// terms they balance; zero-payload users are skipped.
KktResiduals kkt_residuals(const Topology& topology, const Allocation& alloc,
                           const DualState& duals);

/// Same, with one bandwidth price per user (frequency-reuse solutions).
KktResiduals kkt_residuals_per_user(const Topology& topology,
                                    const Allocation& alloc,
                                    const std::vector<double>& lambda_per_user,
                                    const std::vector<double>& mu_per_station);

}  // namespace mecsim

#endif  // MECSIM_SOLVER_HPP
