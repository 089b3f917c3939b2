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

#include "mecsim/reuse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mecsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxExpand = 1100;
constexpr int kMaxBisect = 300;

double total_energy_at(const Topology& topo, const std::vector<double>& x,
                       const std::vector<double>& t) {
  double sum = 0.0;
  for (size_t i = 0; i < topo.users.size(); ++i) {
    const UserRecord& u = topo.users[i];
    if (u.task.data_bits == 0.0 || x[i] == 0.0) continue;
    sum += user_energy(x[i], t[i], u.task, u.gain, topo.noise_w_per_hz);
  }
  return sum;
}

}  // namespace

StationSplit station_bandwidth_split(const Topology& topology, int station,
                                     const std::vector<double>& t, double budget,
                                     const SolveOptions& opts) {
  const StationRecord& st = topology.stations[station];
  StationSplit out;
  if (st.users.empty()) {
    out.converged = true;
    return out;
  }
  BandwidthSplit split = split_bandwidth(topology, st.users, t, budget, opts);
  out.x = std::move(split.x);
  out.lambda = split.lambda;
  out.converged = split.converged;
  return out;
}

GroupBudgetResult group_budget(const Topology& topology,
                               const std::vector<int>& group,
                               const std::vector<double>& t, double beta,
                               const SolveOptions& opts) {
  if (!(beta > 0.0))
    throw std::invalid_argument("group_budget: beta must be > 0");
  GroupBudgetResult out;
  out.lambda.assign(group.size(), 0.0);
  int active_stations = 0;
  for (int j : group) {
    out.user_ids.insert(out.user_ids.end(), topology.stations[j].users.begin(),
                        topology.stations[j].users.end());
    if (!topology.stations[j].users.empty()) ++active_stations;
  }
  if (out.user_ids.empty()) {
    // No claim on spectrum anywhere in the group.
    out.converged = true;
    return out;
  }

  // The group's stations pool the budget, so every active station sees the
  // same clearing price and the price-sum condition pins that price to
  // beta / m directly. The matching budget is then the sum of the per-user
  // responses at that price; no budget search is needed because the
  // responses are strictly decreasing in the price.
  const double lambda = beta / static_cast<double>(active_stations);
  out.probes = 1;
  out.x.resize(out.user_ids.size());
  double total = 0.0;
  bool all_rooted = true;
  for (size_t k = 0; k < out.user_ids.size(); ++k) {
    const UserRecord& u = topology.users[out.user_ids[k]];
    try {
      out.x[k] = user_bandwidth_for_price(t[out.user_ids[k]], u.task, u.gain,
                                          topology.noise_w_per_hz, lambda,
                                          opts);
    } catch (const std::runtime_error&) {
      all_rooted = false;
      out.x[k] = 0.0;
    }
    total += out.x[k];
  }
  out.budget = total;
  for (size_t g = 0; g < group.size(); ++g)
    out.lambda[g] = topology.stations[group[g]].users.empty() ? 0.0 : lambda;
  out.residual =
      std::abs(static_cast<double>(active_stations) * lambda - beta) / beta;
  out.converged = all_rooted;
  return out;
}

ReuseResult allocate_with_reuse(const Topology& topology,
                                const std::vector<std::vector<int>>& groups,
                                const SolveOptions& opts) {
  if (!(opts.epsilon > 0.0))
    throw std::invalid_argument("allocate_with_reuse: epsilon must be > 0");
  validate_topology(topology);
  if (groups.empty())
    throw std::invalid_argument("allocate_with_reuse: empty partition");
  std::vector<int> seen(topology.stations.size(), 0);
  for (const auto& g : groups) {
    if (g.empty())
      throw std::invalid_argument("allocate_with_reuse: empty group");
    for (int j : g) {
      if (j < 0 || j >= static_cast<int>(topology.stations.size()) || seen[j]++)
        throw std::invalid_argument(
            "allocate_with_reuse: partition must cover each station once");
    }
  }
  for (int c : seen)
    if (!c)
      throw std::invalid_argument(
          "allocate_with_reuse: partition must cover each station once");

  const auto verdicts = check_feasibility(topology);
  for (const StationFeasibility& v : verdicts)
    if (!v.feasible)
      throw std::domain_error("allocate_with_reuse: station " +
                              std::to_string(v.station) + " infeasible, slack " +
                              std::to_string(v.slack));

  const size_t n = topology.users.size();
  const int m = static_cast<int>(topology.stations.size());
  const int f_count = static_cast<int>(groups.size());
  const double band = topology.bandwidth_hz;

  std::vector<double> q = initial_compute_split(topology);
  std::vector<double> t(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const TaskSpec& task = topology.users[i].task;
    t[i] = task.deadline_s - task.cycles / q[i];
  }

  SolveReport report;
  ReuseDuals duals;
  duals.lambda.assign(m, 0.0);
  std::vector<double> budgets(f_count, 0.0);
  long signaling = 0;
  int monotonicity_violations = 0;

  struct StepSnapshot {
    std::vector<double> x, budgets, lambda;
    double beta = 0.0;
    double budget_residual = kInf;
    double price_residual = 0.0;
  };

  // One grouped bandwidth pass: find beta whose group budgets fill the band.
  // The total budget response is strictly decreasing in beta (per-user
  // bandwidths are), which the probe log asserts.
  auto bandwidth_step = [&](std::vector<double>& x_out, double beta_seed) {
    StepSnapshot best;
    std::vector<std::pair<double, double>> probes;  // (beta, total budget)
    auto total_at = [&](double beta) {
      StepSnapshot snap;
      snap.beta = beta;
      snap.x.assign(n, 0.0);
      snap.lambda.assign(m, 0.0);
      snap.budgets.assign(f_count, 0.0);
      double total = 0.0;
      for (int f = 0; f < f_count; ++f) {
        GroupBudgetResult gb = group_budget(topology, groups[f], t, beta, opts);
        snap.budgets[f] = gb.budget;
        for (size_t k = 0; k < gb.user_ids.size(); ++k)
          snap.x[gb.user_ids[k]] = gb.x.empty() ? 0.0 : gb.x[k];
        for (size_t g = 0; g < groups[f].size(); ++g)
          snap.lambda[groups[f][g]] = gb.lambda[g];
        snap.price_residual = std::max(
            snap.price_residual, gb.user_ids.empty() ? 0.0 : gb.residual);
        total += gb.budget;
      }
      signaling += m;  // every station reports its share once per probe
      probes.emplace_back(beta, total);
      snap.budget_residual = std::abs(total - band) / band;
      if (snap.budget_residual < best.budget_residual) best = std::move(snap);
      return total;
    };

    const double start = beta_seed > 0.0 ? beta_seed : 1.0;
    double lo = start, hi = start;
    double total = total_at(start);
    if (total > band) {
      int k = 0;
      do {
        lo = hi;
        hi *= 2.0;
        if (++k > kMaxExpand)
          throw std::runtime_error("allocate_with_reuse: beta bracket failed");
        total = total_at(hi);
      } while (total > band);
    } else {
      int k = 0;
      do {
        hi = lo;
        lo *= 0.5;
        if (++k > kMaxExpand)
          throw std::runtime_error("allocate_with_reuse: beta bracket failed");
        total = total_at(lo);
      } while (total < band);
    }
    for (int k = 0; k < kMaxBisect; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      total = total_at(mid);
      if (best.budget_residual <= 1e-9) break;
      if (total > band)
        lo = mid;
      else
        hi = mid;
    }

    std::sort(probes.begin(), probes.end());
    for (size_t k = 1; k < probes.size(); ++k)
      if (probes[k].second > probes[k - 1].second * (1.0 + 1e-9))
        ++monotonicity_violations;

    x_out = best.x;
    budgets = best.budgets;
    duals.beta = best.beta;
    duals.lambda = best.lambda;
    duals.group_price_residual = best.price_residual;
    return best.budget_residual;
  };

  std::vector<double> x(n, 0.0);
  double bw_residual = bandwidth_step(x, 0.0);
  double energy_x = total_energy_at(topology, x, t);
  report.energy_trajectory.push_back(energy_x);

  auto gap_threshold = [&](double reference) {
    return opts.epsilon_mode == EpsilonMode::kAbsolute
               ? opts.epsilon
               : opts.epsilon * std::max(reference, 1e-300);
  };

  std::vector<double> mu(m, 0.0);
  double energy_t = energy_x + 2.0 * gap_threshold(energy_x);
  int outer = 0;
  while (energy_t - energy_x > gap_threshold(energy_x) && outer < opts.max_outer) {
    for (int j = 0; j < m; ++j) {
      const StationRecord& st = topology.stations[j];
      if (st.users.empty()) continue;
      ComputeSplit cs = allocate_compute(topology, j, x, opts);
      mu[j] = cs.mu;
      for (size_t k = 0; k < st.users.size(); ++k) {
        t[st.users[k]] = cs.t[k];
        q[st.users[k]] = cs.q[k];
      }
    }
    energy_t = total_energy_at(topology, x, t);
    report.energy_trajectory.push_back(energy_t);

    bw_residual = bandwidth_step(x, 0.0);
    energy_x = total_energy_at(topology, x, t);
    report.energy_trajectory.push_back(energy_x);
    ++outer;
  }

  report.iterations = outer;
  report.converged = energy_t - energy_x <= gap_threshold(energy_x);
  if (!report.converged)
    report.message = "iteration cap reached before the energy gap closed";

  // Uncounted rounds until the stationarity system is consistent at the
  // returned point (the gap rule leaves the compute side one move stale).
  if (report.converged) {
    for (int polish = 0; polish < 200; ++polish) {
      Allocation probe;
      probe.x = x;
      probe.t = t;
      probe.q = q;
      std::vector<double> lambda_per_user(n, 0.0);
      for (size_t j = 0; j < duals.lambda.size(); ++j)
        for (int i : topology.stations[j].users)
          lambda_per_user[i] = duals.lambda[j];
      if (kkt_residuals_per_user(topology, probe, lambda_per_user, mu)
              .max_normalized() <= 5e-7)
        break;
      for (int j = 0; j < m; ++j) {
        const StationRecord& st = topology.stations[j];
        if (st.users.empty()) continue;
        ComputeSplit cs = allocate_compute(topology, j, x, opts, mu[j]);
        mu[j] = cs.mu;
        for (size_t k = 0; k < st.users.size(); ++k) {
          t[st.users[k]] = cs.t[k];
          q[st.users[k]] = cs.q[k];
        }
      }
      report.energy_trajectory.push_back(total_energy_at(topology, x, t));
      bw_residual = bandwidth_step(x, duals.beta);
      energy_x = total_energy_at(topology, x, t);
      report.energy_trajectory.push_back(energy_x);
      report.polish_rounds = polish + 1;
    }
  }

  if (monotonicity_violations > 0)
    report.message += (report.message.empty() ? "" : "; ") +
                      std::to_string(monotonicity_violations) +
                      " non-monotone price-sum probes";
  report.total_energy = energy_x;
  report.signaling_msgs = signaling;
  report.duals.lambda = duals.beta;  // headline price of the total band
  report.duals.mu = mu;

  ReuseResult result;
  Allocation alloc;
  alloc.x = std::move(x);
  alloc.t = t;
  alloc.q = q;
  alloc.power.assign(n, 0.0);
  alloc.energy.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const UserRecord& u = topology.users[i];
    if (u.task.data_bits == 0.0 || alloc.x[i] == 0.0) continue;
    alloc.power[i] =
        min_power(alloc.x[i], alloc.t[i], u.task, u.gain, topology.noise_w_per_hz);
    alloc.energy[i] = alloc.power[i] * alloc.t[i];
  }
  result.allocation = std::move(alloc);

  result.plan.factor = f_count;
  result.plan.groups = groups;
  result.plan.budgets = budgets;
  result.duals = duals;
  result.report = report;

  std::vector<double> lambda_per_user(n, 0.0);
  for (int f = 0; f < f_count; ++f)
    for (int j : groups[f])
      for (int i : topology.stations[j].users)
        lambda_per_user[i] = duals.lambda[j];
  result.report.residuals = kkt_residuals_per_user(topology, result.allocation,
                                                   lambda_per_user, mu);
  result.report.residuals.bandwidth_rel = bw_residual;
  return result;
}

}  // namespace mecsim
