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

#ifndef MECSIM_MODEL_HPP
#define MECSIM_MODEL_HPP

#include <string>
#include <vector>

namespace mecsim {

// All quantities are SI, linear scale: Hz, W, W/Hz, bits, CPU cycles,
// cycles/s, seconds, Joules. dB-style configuration values are converted
// once at parse time (see dbm_per_hz_to_w_per_hz) and never re-enter the
// arithmetic.

/// One offloading job: payload to upload, cycles to execute, completion
/// deadline.
struct TaskSpec {
  double data_bits = 0.0;   // L: uplink payload size
  double cycles = 0.0;      // W: CPU cycles the job needs
  double deadline_s = 0.0;  // D: end-to-end completion budget
};

struct UserRecord {
  int id = -1;
  TaskSpec task;
  double gain = 0.0;  // h: combined pathloss x fading power gain, linear
  int station = -1;   // index of the serving station
};

struct StationRecord {
  int id = -1;
  double capacity = 0.0;   // C_j: server speed in cycles/s
  std::vector<int> users;  // indices into Topology::users, in id order
};

struct Topology {
  std::vector<UserRecord> users;
  std::vector<StationRecord> stations;
  double bandwidth_hz = 0.0;    // B: system uplink band shared by all users
  double noise_w_per_hz = 0.0;  // N0: noise power spectral density
};

/// Checks structural invariants: positive band/noise/capacities/gains,
/// positive cycle and deadline values (zero-payload tasks are allowed,
/// zero-cycle tasks are not), and that the station user lists partition the
/// user set consistently with each user's station field.
/// Throws std::invalid_argument describing the first violation found.
void validate_topology(const Topology& topology);

/// A full resource assignment. x and t are the primal variables; q, power
/// and energy are derived per user (q = W/(D - t), power from min_power,
/// energy = power * t).
struct Allocation {
  std::vector<double> x;       // bandwidth, Hz
  std::vector<double> t;       // transmission-time budget, s
  std::vector<double> q;       // compute share, cycles/s
  std::vector<double> power;   // transmit power, W
  std::vector<double> energy;  // transmission energy, J

  double total_energy() const;
};

/// -174 dBm/Hz -> 10^-20.4 W/Hz and friends.
double dbm_per_hz_to_w_per_hz(double dbm_per_hz);

/// Shannon rate of a single user over x Hz with transmit power p:
///   R = x * log2(1 + p*h/(x*N0)).
/// Strictly increasing in p and in h; zero at p = 0.
double achievable_rate(double x_hz, double power_w, double gain,
                       double noise_w_per_hz);

/// Smallest transmit power that uploads task.data_bits within t_s seconds
/// over x_hz of band, i.e. the power whose achievable rate equals L/t:
///   P = (N0*x/h) * (2^{L/(t*x)} - 1).
/// A non-positive t signals an infeasible compute allocation and throws
/// std::domain_error. Returns +inf when the required rate per Hz overflows
/// the exponential (see user_energy).
double min_power(double x_hz, double t_s, const TaskSpec& task, double gain,
                 double noise_w_per_hz);

/// Transmission energy at the minimal power:
///   E(x, t) = (N0/h) * x * t * (2^{L/(x*t)} - 1).
/// Jointly convex in (x, t), strictly decreasing in both. For exponents
/// beyond double range the result is +inf; such points only arise
/// transiently inside bisection brackets and the sentinel keeps every
/// ordering test monotone without overflow traps.
double user_energy(double x_hz, double t_s, const TaskSpec& task, double gain,
                   double noise_w_per_hz);

/// Common factor of both partial derivatives of user_energy:
///   factor(z) = 2^z - z*ln2*2^z - 1,   z = L/(x*t),
/// with dE/dx = (N0*t/h)*factor and dE/dt = (N0*x/h)*factor. Negative for
/// z > 0, tends to 0 as z -> 0 and to -inf as z grows; -inf once 2^z
/// overflows. Evaluated by series below z*ln2 = 1e-4 to avoid cancellation.
double energy_partial_factor(double z);

/// dE/dx at (x, t); -inf on exponent overflow.
double user_energy_dx(double x_hz, double t_s, const TaskSpec& task,
                      double gain, double noise_w_per_hz);

/// dE/dt at (x, t); -inf on exponent overflow.
double user_energy_dt(double x_hz, double t_s, const TaskSpec& task,
                      double gain, double noise_w_per_hz);

/// Transmission-time budget left by a compute share q: t = D - W/q.
/// Requires q > W/D (otherwise the deadline cannot be met; throws
/// std::domain_error).
double t_from_q(double q_cycles_per_s, const TaskSpec& task);

/// Inverse map: q = W/(D - t) for t in (0, D). Throws std::domain_error
/// outside the open interval.
double q_from_t(double t_s, const TaskSpec& task);

/// Necessary and sufficient condition for a station to admit any
/// deadline-respecting compute split: sum_i W_i/D_i < C_j strictly.
struct StationFeasibility {
  int station = -1;
  bool feasible = false;
  double min_load = 0.0;  // sum of W_i/D_i over the station's users
  double slack = 0.0;     // capacity - min_load (negative if infeasible)
};

std::vector<StationFeasibility> check_feasibility(const Topology& topology);

bool all_feasible(const std::vector<StationFeasibility>& verdicts);

/// Equal compute split q = C_j/K_j per station when that split meets every
/// deadline, otherwise a load-proportional split q_i = (W_i/D_i)*C_j/L_j
/// which is strictly deadline-feasible whenever the station is. Returns the
/// per-user q vector used to seed the iterative solvers.
std::vector<double> initial_compute_split(const Topology& topology);

}  // namespace mecsim

#endif  // MECSIM_MODEL_HPP
