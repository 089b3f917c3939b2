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

#include "mecsim/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mecsim {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("topology: " + msg);
}

}  // namespace

double Allocation::total_energy() const {
  double sum = 0.0;
  for (double e : energy) sum += e;
  return sum;
}

void validate_topology(const Topology& topology) {
  if (!finite_positive(topology.bandwidth_hz)) fail("bandwidth must be > 0");
  if (!finite_positive(topology.noise_w_per_hz)) fail("noise density must be > 0");
  if (topology.stations.empty()) fail("at least one station required");
  if (topology.users.empty()) fail("at least one user required");

  const int n_users = static_cast<int>(topology.users.size());
  const int n_stations = static_cast<int>(topology.stations.size());
  std::vector<int> seen(n_users, 0);
  for (int j = 0; j < n_stations; ++j) {
    const StationRecord& st = topology.stations[j];
    if (!finite_positive(st.capacity))
      fail("station " + std::to_string(j) + " capacity must be > 0");
    for (int i : st.users) {
      if (i < 0 || i >= n_users)
        fail("station " + std::to_string(j) + " lists unknown user " +
             std::to_string(i));
      if (seen[i]++)
        fail("user " + std::to_string(i) + " listed by more than one station");
      if (topology.users[i].station != j)
        fail("user " + std::to_string(i) + " station field disagrees with list");
    }
  }
  for (int i = 0; i < n_users; ++i) {
    if (!seen[i]) fail("user " + std::to_string(i) + " not listed by any station");
    const UserRecord& u = topology.users[i];
    if (!finite_positive(u.gain))
      fail("user " + std::to_string(i) + " channel gain must be > 0");
    if (!(std::isfinite(u.task.data_bits) && u.task.data_bits >= 0.0))
      fail("user " + std::to_string(i) + " data size must be >= 0");
    // Zero-cycle tasks would make the q <-> t substitution singular.
    if (!finite_positive(u.task.cycles))
      fail("user " + std::to_string(i) + " cycle demand must be > 0");
    if (!finite_positive(u.task.deadline_s))
      fail("user " + std::to_string(i) + " deadline must be > 0");
  }
}

double dbm_per_hz_to_w_per_hz(double dbm_per_hz) {
  return std::pow(10.0, (dbm_per_hz - 30.0) / 10.0);
}

double achievable_rate(double x_hz, double power_w, double gain,
                       double noise_w_per_hz) {
  if (!(x_hz > 0.0) || !(power_w >= 0.0) || !(gain > 0.0) ||
      !(noise_w_per_hz > 0.0) || !std::isfinite(x_hz) || !std::isfinite(gain) ||
      !std::isfinite(noise_w_per_hz))
    throw std::invalid_argument("achievable_rate: arguments out of domain");
  const double snr = power_w * gain / (x_hz * noise_w_per_hz);
  return x_hz * std::log1p(snr) / kLn2;
}

double min_power(double x_hz, double t_s, const TaskSpec& task, double gain,
                 double noise_w_per_hz) {
  if (!(x_hz > 0.0) || !(gain > 0.0) || !(noise_w_per_hz > 0.0))
    throw std::invalid_argument("min_power: arguments out of domain");
  if (!(t_s > 0.0))
    throw std::domain_error("min_power: non-positive transmission time");
  if (task.data_bits == 0.0) return 0.0;
  const double z = task.data_bits / (t_s * x_hz);  // required bits/s per Hz
  return noise_w_per_hz * x_hz / gain * std::expm1(kLn2 * z);
}

double user_energy(double x_hz, double t_s, const TaskSpec& task, double gain,
                   double noise_w_per_hz) {
  if (!(x_hz > 0.0) || !(t_s > 0.0) || !(gain > 0.0) || !(noise_w_per_hz > 0.0))
    throw std::invalid_argument("user_energy: arguments out of domain");
  if (task.data_bits == 0.0) return 0.0;
  const double z = task.data_bits / (x_hz * t_s);
  return noise_w_per_hz / gain * x_hz * t_s * std::expm1(kLn2 * z);
}

double energy_partial_factor(double z) {
  const double w = z * kLn2;
  if (w < 1e-4) {
    // expm1(w) - w*e^w = -w^2/2 - w^3/3 - w^4/8 - w^5/30 - ...
    return -w * w * (0.5 + w * (1.0 / 3.0 + w * (0.125 + w / 30.0)));
  }
  if (w > 700.0) return -kInf;
  return std::expm1(w) - w * std::exp(w);
}

double user_energy_dx(double x_hz, double t_s, const TaskSpec& task,
                      double gain, double noise_w_per_hz) {
  if (task.data_bits == 0.0) return 0.0;
  const double z = task.data_bits / (x_hz * t_s);
  return noise_w_per_hz * t_s / gain * energy_partial_factor(z);
}

double user_energy_dt(double x_hz, double t_s, const TaskSpec& task,
                      double gain, double noise_w_per_hz) {
  if (task.data_bits == 0.0) return 0.0;
  const double z = task.data_bits / (x_hz * t_s);
  return noise_w_per_hz * x_hz / gain * energy_partial_factor(z);
}

double t_from_q(double q_cycles_per_s, const TaskSpec& task) {
  if (!(q_cycles_per_s > task.cycles / task.deadline_s))
    throw std::domain_error("t_from_q: compute share cannot meet the deadline");
  return task.deadline_s - task.cycles / q_cycles_per_s;
}

double q_from_t(double t_s, const TaskSpec& task) {
  if (!(t_s > 0.0) || !(t_s < task.deadline_s))
    throw std::domain_error("q_from_t: transmission time outside (0, deadline)");
  return task.cycles / (task.deadline_s - t_s);
}

std::vector<StationFeasibility> check_feasibility(const Topology& topology) {
  std::vector<StationFeasibility> out;
  out.reserve(topology.stations.size());
  for (const StationRecord& st : topology.stations) {
    StationFeasibility v;
    v.station = st.id;
    v.min_load = 0.0;
    for (int i : st.users) {
      const TaskSpec& task = topology.users[i].task;
      v.min_load += task.cycles / task.deadline_s;
    }
    v.slack = st.capacity - v.min_load;
    v.feasible = v.min_load < st.capacity;  // boundary excluded
    out.push_back(v);
  }
  return out;
}

bool all_feasible(const std::vector<StationFeasibility>& verdicts) {
  for (const StationFeasibility& v : verdicts)
    if (!v.feasible) return false;
  return true;
}

std::vector<double> initial_compute_split(const Topology& topology) {
  std::vector<double> q(topology.users.size(), 0.0);
  for (const StationRecord& st : topology.stations) {
    if (st.users.empty()) continue;
    const double equal = st.capacity / static_cast<double>(st.users.size());
    bool equal_ok = true;
    double min_load = 0.0;
    for (int i : st.users) {
      const TaskSpec& task = topology.users[i].task;
      min_load += task.cycles / task.deadline_s;
      if (!(equal > task.cycles / task.deadline_s)) equal_ok = false;
    }
    if (equal_ok) {
      for (int i : st.users) q[i] = equal;
    } else {
      // Scale each user's bare-minimum rate up to full capacity; strictly
      // deadline-feasible whenever min_load < capacity.
      const double scale = st.capacity / min_load;
      for (int i : st.users) {
        const TaskSpec& task = topology.users[i].task;
        q[i] = task.cycles / task.deadline_s * scale;
      }
    }
  }
  return q;
}

}  // namespace mecsim
