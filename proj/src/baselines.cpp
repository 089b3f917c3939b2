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

#include "mecsim/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mecsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Equal compute split q = C_j/K_j; records users whose deadline breaks.
void equal_compute_split(const Topology& topo, std::vector<double>& q,
                         std::vector<double>& t, std::vector<int>& broken) {
  for (const StationRecord& st : topo.stations) {
    if (st.users.empty()) continue;
    const double share = st.capacity / static_cast<double>(st.users.size());
    for (int i : st.users) {
      const TaskSpec& task = topo.users[i].task;
      q[i] = share;
      t[i] = task.deadline_s - task.cycles / share;
      if (!(t[i] > 0.0)) broken.push_back(i);
    }
  }
}

void fill_power_energy(const Topology& topo, Allocation& a) {
  const size_t n = topo.users.size();
  a.power.assign(n, 0.0);
  a.energy.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const UserRecord& u = topo.users[i];
    if (u.task.data_bits == 0.0 || a.x[i] == 0.0) continue;
    if (!(a.t[i] > 0.0)) {
      a.power[i] = kInf;
      a.energy[i] = kInf;
      continue;
    }
    a.power[i] = min_power(a.x[i], a.t[i], u.task, u.gain, topo.noise_w_per_hz);
    a.energy[i] = a.power[i] * a.t[i];
  }
}

BaselineResult finish(const Topology& topo, Allocation a,
                      std::vector<int> broken, int iterations) {
  BaselineResult r;
  r.feasible = broken.empty();
  r.infeasible_users = std::move(broken);
  fill_power_energy(topo, a);
  r.allocation = std::move(a);
  r.iterations = iterations;
  r.total_energy = r.feasible ? r.allocation.total_energy() : kInf;
  return r;
}

}  // namespace

BaselineResult allocate_fixed(const Topology& topo) {
  validate_topology(topo);
  const size_t n = topo.users.size();
  Allocation a;
  a.x.assign(n, topo.bandwidth_hz / static_cast<double>(n));
  a.t.assign(n, 0.0);
  a.q.assign(n, 0.0);
  std::vector<int> broken;
  equal_compute_split(topo, a.q, a.t, broken);
  return finish(topo, std::move(a), std::move(broken), 1);
}

BaselineResult allocate_fixed_bandwidth(const Topology& topo,
                                        const SolveOptions& opts) {
  validate_topology(topo);
  const size_t n = topo.users.size();
  Allocation a;
  a.x.assign(n, topo.bandwidth_hz / static_cast<double>(n));
  a.t.assign(n, 0.0);
  a.q.assign(n, 0.0);
  std::vector<int> broken;
  for (size_t j = 0; j < topo.stations.size(); ++j) {
    const StationRecord& st = topo.stations[j];
    if (st.users.empty()) continue;
    double min_load = 0.0;
    for (int i : st.users) {
      const TaskSpec& task = topo.users[i].task;
      min_load += task.cycles / task.deadline_s;
    }
    if (!(min_load < st.capacity)) {
      broken.insert(broken.end(), st.users.begin(), st.users.end());
      continue;
    }
    ComputeSplit cs = allocate_compute(topo, static_cast<int>(j), a.x, opts);
    for (size_t k = 0; k < st.users.size(); ++k) {
      a.t[st.users[k]] = cs.t[k];
      a.q[st.users[k]] = cs.q[k];
    }
  }
  return finish(topo, std::move(a), std::move(broken), 1);
}

BaselineResult allocate_fixed_bandwidth_per_bs(const Topology& topo,
                                               const SolveOptions& opts) {
  validate_topology(topo);
  if (!(opts.epsilon > 0.0))
    throw std::invalid_argument("allocate_fixed_bandwidth_per_bs: epsilon must be > 0");
  const size_t n = topo.users.size();
  const double station_budget =
      topo.bandwidth_hz / static_cast<double>(topo.stations.size());

  Allocation a;
  a.x.assign(n, 0.0);
  a.t.assign(n, 0.0);
  a.q.assign(n, 0.0);
  std::vector<int> broken;
  int rounds = 1;

  std::vector<double> q0 = initial_compute_split(topo);
  for (size_t j = 0; j < topo.stations.size(); ++j) {
    const StationRecord& st = topo.stations[j];
    if (st.users.empty()) continue;
    double min_load = 0.0;
    for (int i : st.users) {
      const TaskSpec& task = topo.users[i].task;
      min_load += task.cycles / task.deadline_s;
    }
    if (!(min_load < st.capacity)) {
      broken.insert(broken.end(), st.users.begin(), st.users.end());
      continue;
    }

    // Per-station alternation to its own fixed point, band capped at B/M.
    for (int i : st.users) {
      const TaskSpec& task = topo.users[i].task;
      a.t[i] = task.deadline_s - task.cycles / q0[i];
    }
    BandwidthSplit bw =
        split_bandwidth(topo, st.users, a.t, station_budget, opts);
    for (size_t k = 0; k < st.users.size(); ++k) a.x[st.users[k]] = bw.x[k];

    auto station_energy = [&]() {
      double sum = 0.0;
      for (int i : st.users) {
        const UserRecord& u = topo.users[i];
        if (u.task.data_bits == 0.0 || a.x[i] == 0.0) continue;
        sum += user_energy(a.x[i], a.t[i], u.task, u.gain, topo.noise_w_per_hz);
      }
      return sum;
    };

    // Run the station's alternation to its numerical fixed point; the
    // station problem is cheap and the baseline's contract is the exact
    // restricted optimum.
    double energy_x = station_energy();
    auto threshold = [&] { return 1e-13 * std::max(energy_x, 1e-300); };
    double energy_t = energy_x + 2.0 * threshold() + 2.0 * opts.epsilon;
    int outer = 0;
    double mu_seed = 0.0;
    while (energy_t - energy_x > threshold() && outer < opts.max_outer) {
      ComputeSplit cs =
          allocate_compute(topo, static_cast<int>(j), a.x, opts, mu_seed);
      mu_seed = cs.mu;
      for (size_t k = 0; k < st.users.size(); ++k) {
        a.t[st.users[k]] = cs.t[k];
        a.q[st.users[k]] = cs.q[k];
      }
      energy_t = station_energy();
      bw = split_bandwidth(topo, st.users, a.t, station_budget, opts, nullptr,
                           bw.lambda);
      for (size_t k = 0; k < st.users.size(); ++k) a.x[st.users[k]] = bw.x[k];
      energy_x = station_energy();
      ++outer;
    }
    rounds = std::max(rounds, outer);
  }
  return finish(topo, std::move(a), std::move(broken), rounds);
}

BaselineResult allocate_fixed_computing(const Topology& topo,
                                        const SolveOptions& opts) {
  validate_topology(topo);
  const size_t n = topo.users.size();
  Allocation a;
  a.x.assign(n, 0.0);
  a.t.assign(n, 0.0);
  a.q.assign(n, 0.0);
  std::vector<int> broken;
  equal_compute_split(topo, a.q, a.t, broken);
  if (broken.empty()) {
    BandwidthSplit bw = allocate_bandwidth(topo, a.t, opts);
    for (size_t i = 0; i < n; ++i) a.x[i] = bw.x[i];
  } else {
    a.x.assign(n, topo.bandwidth_hz / static_cast<double>(n));
  }
  return finish(topo, std::move(a), std::move(broken), 1);
}

}  // namespace mecsim
