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

#include "mecsim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mecsim {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxExpand = 1100;   // covers the full double exponent range
constexpr int kMaxBisect = 300;

// Sign of energy_partial_factor(z) + a for a > 0, robust when either side
// overflows double range. log_a must be finite (natural log of a).
int factor_plus_sign(double z, double a, double log_a) {
  const double w = z * kLn2;
  if (w <= 700.0 && std::isfinite(a)) {
    const double s = energy_partial_factor(z) + a;
    return s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
  }
  // |factor| ~ e^w * (w - 1) for large w; compare in the log domain.
  const double log_factor = w + std::log(std::max(w - 1.0, 1.0));
  return log_a > log_factor ? 1 : -1;
}

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

double KktResiduals::max_normalized() const {
  double m = std::max(bandwidth_rel, compute_rel_max);
  m = std::max(m, stationarity_x);
  m = std::max(m, stationarity_t);
  return m;
}

double bandwidth_stationarity(double x, double t, const TaskSpec& task,
                              double gain, double noise_w_per_hz,
                              double lambda) {
  if (!(x > 0.0) || !(t > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("bandwidth_stationarity: out of domain");
  const double z = task.data_bits / (t * x);
  return noise_w_per_hz * t / gain * energy_partial_factor(z) + lambda;
}

double compute_stationarity(double t, double x, const TaskSpec& task,
                            double gain, double noise_w_per_hz, double mu) {
  if (!(x > 0.0) || !(t > 0.0) || !(t < task.deadline_s) || !(mu >= 0.0))
    throw std::invalid_argument("compute_stationarity: out of domain");
  const double z = task.data_bits / (x * t);
  const double gap = task.deadline_s - t;
  return noise_w_per_hz * x / gain * energy_partial_factor(z) +
         mu * task.cycles / (gap * gap);
}

double user_bandwidth_for_price(double t, const TaskSpec& task, double gain,
                                double noise_w_per_hz, double lambda,
                                const SolveOptions& opts) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("user_bandwidth_for_price: lambda must be > 0");
  if (task.data_bits == 0.0) return 0.0;
  if (!(t > 0.0))
    throw std::domain_error("user_bandwidth_for_price: non-positive time budget");

  // g(x) = c*(factor(z) + a) with c = N0*t/h, a = lambda/c, z = L/(t*x).
  const double c = noise_w_per_hz * t / gain;
  const double a = lambda / c;
  const double log_a = std::log(lambda) - std::log(c);
  auto sign_at = [&](double x) {
    return factor_plus_sign(task.data_bits / (t * x), a, log_a);
  };

  double lo, hi;
  const double x0 = task.data_bits / t;  // z = 1 seed
  int s0 = sign_at(x0);
  if (s0 == 0) return x0;
  if (s0 > 0) {
    hi = x0;
    lo = x0;
    int n = 0;
    do {
      lo *= 0.5;
      if (++n > kMaxExpand)
        throw std::runtime_error("user_bandwidth_for_price: bracket failed (low)");
    } while (sign_at(lo) > 0);
  } else {
    lo = x0;
    hi = x0;
    int n = 0;
    do {
      hi *= 2.0;
      if (++n > kMaxExpand)
        throw std::runtime_error("user_bandwidth_for_price: bracket failed (high)");
    } while (sign_at(hi) < 0);
  }

  for (int n = 0; n < kMaxBisect && (hi - lo) > opts.inner_rel_width * hi; ++n) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // float exhaustion
    if (sign_at(mid) >= 0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

BandwidthSplit split_bandwidth(const Topology& topology,
                               const std::vector<int>& user_ids,
                               const std::vector<double>& t, double budget,
                               const SolveOptions& opts,
                               const BandwidthProbeObserver* observer,
                               double price_seed) {
  BandwidthSplit out;
  if (user_ids.empty()) {
    out.converged = true;
    return out;
  }
  if (!(budget > 0.0))
    throw std::invalid_argument("split_bandwidth: budget must be > 0");

  bool any_demand = false;
  for (int i : user_ids)
    if (topology.users[i].task.data_bits > 0.0) any_demand = true;
  if (!any_demand) {
    // No user needs to transmit; the budget constraint is slack in energy.
    out.x.assign(user_ids.size(), budget / static_cast<double>(user_ids.size()));
    out.lambda = 0.0;
    out.converged = true;
    return out;
  }

  std::vector<double> x(user_ids.size(), 0.0);
  double last_price = 0.0;
  auto total_at = [&](double lambda) {
    last_price = lambda;
    double sum = 0.0;
    for (size_t k = 0; k < user_ids.size(); ++k) {
      const UserRecord& u = topology.users[user_ids[k]];
      x[k] = user_bandwidth_for_price(t[user_ids[k]], u.task, u.gain,
                                      topology.noise_w_per_hz, lambda, opts);
      sum += x[k];
    }
    ++out.probes;
    if (observer) {
      std::vector<double> station_sums(topology.stations.size(), 0.0);
      for (size_t k = 0; k < user_ids.size(); ++k)
        station_sums[topology.users[user_ids[k]].station] += x[k];
      (*observer)(lambda, station_sums);
    }
    return sum;
  };

  // Expand a price bracket [lo, hi] with total(lo) >= budget >= total(hi).
  const double start = price_seed > 0.0 ? price_seed : 1.0;
  double lo = start, hi = start;
  double sum = total_at(start);
  if (sum > budget) {
    int n = 0;
    do {
      lo = hi;
      hi *= 2.0;
      if (++n > kMaxExpand)
        throw std::runtime_error("split_bandwidth: price bracket failed (high)");
      sum = total_at(hi);
    } while (sum > budget);
  } else {
    int n = 0;
    do {
      hi = lo;
      lo *= 0.5;
      if (++n > kMaxExpand)
        throw std::runtime_error("split_bandwidth: price bracket failed (low)");
      sum = total_at(lo);
    } while (sum < budget);
  }

  double best_res = std::abs(sum - budget) / budget;
  double best_lambda = last_price;
  std::vector<double> best_x = x;

  for (int n = 0; n < kMaxBisect; ++n) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    sum = total_at(mid);
    const double res = std::abs(sum - budget) / budget;
    if (res < best_res) {
      best_res = res;
      best_lambda = mid;
      best_x = x;
    }
    const bool width_ok =
        opts.lambda_rel_width <= 0.0 || (hi - lo) <= opts.lambda_rel_width * mid;
    if (res <= opts.bandwidth_rel_tol && width_ok) break;
    if (sum > budget)
      lo = mid;
    else
      hi = mid;
  }

  out.x = std::move(best_x);
  out.lambda = best_lambda;
  out.residual = best_res;
  out.converged = best_res <= std::max(opts.bandwidth_rel_tol, 1e-9);
  return out;
}

BandwidthSplit allocate_bandwidth(const Topology& topology,
                                  const std::vector<double>& t,
                                  const SolveOptions& opts,
                                  const BandwidthProbeObserver* observer,
                                  double price_seed) {
  std::vector<int> all(topology.users.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return split_bandwidth(topology, all, t, topology.bandwidth_hz, opts,
                         observer, price_seed);
}

namespace {

// Root of the compute-KKT residual for one user, solved in the gap
// coordinate gap = D - t so that tiny gaps (large compute shares) keep full
// relative precision. f is decreasing in gap.
double user_gap_for_price(const UserRecord& u, double x, double noise,
                          double mu, const SolveOptions& opts) {
  const TaskSpec& task = u.task;
  if (task.data_bits == 0.0) return task.deadline_s;  // t -> 0, q -> W/D
  if (!(x > 0.0))
    throw std::invalid_argument("allocate_compute: zero bandwidth for a user with payload");

  const double d = task.deadline_s;
  const double c = noise * x / u.gain;
  const double log_mu_w_over_c = std::log(mu) + std::log(task.cycles) - std::log(c);
  auto sign_at = [&](double gap) {
    const double z = task.data_bits / (x * (d - gap));
    const double a = mu * task.cycles / (gap * gap * c);
    const double log_a = log_mu_w_over_c - 2.0 * std::log(gap);
    // f/c = factor(z) + a; f decreasing in gap.
    return factor_plus_sign(z, a, log_a);
  };

  double lo, hi;
  const double g0 = 0.5 * d;
  int s0 = sign_at(g0);
  if (s0 == 0) return g0;
  if (s0 > 0) {
    // Root at larger gap; halve the remaining (d - gap) each step.
    lo = g0;
    hi = g0;
    int n = 0;
    do {
      hi = 0.5 * (hi + d);
      if (++n > kMaxExpand)
        throw std::runtime_error("allocate_compute: gap bracket failed (high)");
    } while (sign_at(hi) > 0);
  } else {
    hi = g0;
    lo = g0;
    int n = 0;
    do {
      lo *= 0.5;
      if (++n > kMaxExpand)
        throw std::runtime_error("allocate_compute: gap bracket failed (low)");
    } while (sign_at(lo) < 0);
  }

  for (int n = 0; n < kMaxBisect && (hi - lo) > opts.inner_rel_width * lo; ++n) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sign_at(mid) <= 0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ComputeSplit allocate_compute(const Topology& topology, int station,
                              const std::vector<double>& x,
                              const SolveOptions& opts, double price_seed) {
  const StationRecord& st = topology.stations[station];
  ComputeSplit out;
  if (st.users.empty()) {
    out.converged = true;
    return out;
  }

  double min_load = 0.0;
  for (int i : st.users) {
    const TaskSpec& task = topology.users[i].task;
    min_load += task.cycles / task.deadline_s;
  }
  if (!(min_load < st.capacity))
    throw std::domain_error(
        "allocate_compute: station " + std::to_string(station) +
        " infeasible, slack " + std::to_string(st.capacity - min_load));

  const double cap = st.capacity;
  std::vector<double> gaps(st.users.size(), 0.0);
  bool all_idle = true;
  for (int i : st.users)
    if (topology.users[i].task.data_bits > 0.0 && x[i] > 0.0) all_idle = false;
  if (all_idle) {
    // Zero transmission demand: any capacity-filling split is optimal. Top
    // the minimum shares up uniformly.
    const double extra = (cap - min_load) / static_cast<double>(st.users.size());
    for (size_t k = 0; k < st.users.size(); ++k) {
      const TaskSpec& task = topology.users[st.users[k]].task;
      out.q.push_back(task.cycles / task.deadline_s + extra);
      out.t.push_back(task.deadline_s - task.cycles / out.q.back());
    }
    out.converged = true;
    return out;
  }

  double last_price = 0.0;
  auto load_at = [&](double mu) {
    last_price = mu;
    double load = 0.0;
    for (size_t k = 0; k < st.users.size(); ++k) {
      const UserRecord& u = topology.users[st.users[k]];
      gaps[k] = user_gap_for_price(u, x[st.users[k]], topology.noise_w_per_hz,
                                   mu, opts);
      load += u.task.cycles / gaps[k];
    }
    ++out.probes;
    return load;
  };

  // load(mu) is strictly decreasing: expand, then bisect.
  const double start = price_seed > 0.0 ? price_seed : 1.0;
  double lo = start, hi = start;
  double load = load_at(start);
  if (load > cap) {
    int n = 0;
    do {
      lo = hi;
      hi *= 2.0;
      if (++n > kMaxExpand)
        throw std::runtime_error("allocate_compute: price bracket failed (high)");
      load = load_at(hi);
    } while (load > cap);
  } else {
    int n = 0;
    do {
      hi = lo;
      lo *= 0.5;
      if (++n > kMaxExpand)
        throw std::runtime_error("allocate_compute: price bracket failed (low)");
      load = load_at(lo);
    } while (load < cap);
  }

  double best_res = std::abs(load - cap) / cap;
  double best_mu = last_price;
  std::vector<double> best_gaps = gaps;

  for (int n = 0; n < kMaxBisect; ++n) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    load = load_at(mid);
    const double res = std::abs(load - cap) / cap;
    if (res < best_res) {
      best_res = res;
      best_mu = mid;
      best_gaps = gaps;
    }
    if (res <= opts.compute_rel_tol) break;
    if (load > cap)
      lo = mid;
    else
      hi = mid;
  }

  out.mu = best_mu;
  out.residual = best_res;
  out.converged = best_res <= std::max(opts.compute_rel_tol, 1e-7);
  out.t.resize(st.users.size());
  out.q.resize(st.users.size());
  for (size_t k = 0; k < st.users.size(); ++k) {
    const TaskSpec& task = topology.users[st.users[k]].task;
    const double gap = best_gaps[k];
    out.t[k] = gap >= task.deadline_s ? 0.0 : task.deadline_s - gap;
    out.q[k] = task.cycles / gap;
  }
  return out;
}

namespace {

Allocation assemble_allocation(const Topology& topo, std::vector<double> x,
                               std::vector<double> t, std::vector<double> q) {
  Allocation a;
  a.x = std::move(x);
  a.t = std::move(t);
  a.q = std::move(q);
  const size_t n = topo.users.size();
  a.power.assign(n, 0.0);
  a.energy.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const UserRecord& u = topo.users[i];
    if (u.task.data_bits == 0.0 || a.x[i] == 0.0) continue;
    a.power[i] = min_power(a.x[i], a.t[i], u.task, u.gain, topo.noise_w_per_hz);
    a.energy[i] = a.power[i] * a.t[i];
  }
  return a;
}

}  // namespace

SolveResult solve_joint(const Topology& topology, const SolveOptions& opts) {
  if (!(opts.epsilon > 0.0))
    throw std::invalid_argument("solve_joint: epsilon must be > 0");
  if (opts.max_outer < 1)
    throw std::invalid_argument("solve_joint: max_outer must be >= 1");
  validate_topology(topology);
  const auto verdicts = check_feasibility(topology);
  for (const StationFeasibility& v : verdicts)
    if (!v.feasible)
      throw std::domain_error("solve_joint: station " + std::to_string(v.station) +
                              " infeasible, slack " + std::to_string(v.slack));

  const size_t n = topology.users.size();
  const int m = static_cast<int>(topology.stations.size());

  std::vector<double> q = initial_compute_split(topology);
  std::vector<double> t(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const TaskSpec& task = topology.users[i].task;
    t[i] = task.deadline_s - task.cycles / q[i];
  }

  SolveReport report;
  long lambda_probes = 0;

  auto bandwidth_pass = [&](std::vector<double>& x_out, double seed) {
    BandwidthSplit bw = allocate_bandwidth(topology, t, opts, nullptr, seed);
    lambda_probes += bw.probes;
    for (size_t i = 0; i < n; ++i) x_out[i] = bw.x[i];
    return bw;
  };

  std::vector<double> x(n, 0.0);
  BandwidthSplit bw = bandwidth_pass(x, 0.0);
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

    bw = bandwidth_pass(x, 0.0);
    energy_x = total_energy_at(topology, x, t);
    report.energy_trajectory.push_back(energy_x);
    ++outer;
  }

  report.iterations = outer;
  report.converged = energy_t - energy_x <= gap_threshold(energy_x);
  if (!report.converged)
    report.message = "iteration cap reached before the energy gap closed";

  // The gap rule can fire while the compute-side stationarity still carries
  // the final bandwidth move; keep alternating (uncounted) until the whole
  // KKT system is consistent at the returned point.
  if (report.converged) {
    // Contraction per round can be as weak as ~0.8 on crowded instances;
    // the cap covers closing three decades at that rate.
    for (int polish = 0; polish < 200; ++polish) {
      Allocation probe;
      probe.x = x;
      probe.t = t;
      probe.q = q;
      DualState duals{bw.lambda, mu};
      if (kkt_residuals(topology, probe, duals).max_normalized() <= 5e-7)
        break;
      for (int j = 0; j < m; ++j) {
        const StationRecord& st = topology.stations[j];
        if (st.users.empty()) continue;
        // Seeding the price searches from the previous round cuts the
        // bracket walks; the fixed point is unchanged.
        ComputeSplit cs = allocate_compute(topology, j, x, opts, mu[j]);
        mu[j] = cs.mu;
        for (size_t k = 0; k < st.users.size(); ++k) {
          t[st.users[k]] = cs.t[k];
          q[st.users[k]] = cs.q[k];
        }
      }
      report.energy_trajectory.push_back(total_energy_at(topology, x, t));
      bw = bandwidth_pass(x, bw.lambda);
      energy_x = total_energy_at(topology, x, t);
      report.energy_trajectory.push_back(energy_x);
      report.polish_rounds = polish + 1;
    }
  }

  report.total_energy = energy_x;
  report.signaling_msgs = lambda_probes * m;
  report.duals.lambda = bw.lambda;
  report.duals.mu = mu;

  SolveResult result;
  result.allocation = assemble_allocation(topology, std::move(x), std::move(t),
                                          std::move(q));
  result.report = report;
  result.report.residuals =
      kkt_residuals(topology, result.allocation, result.report.duals);
  return result;
}

KktResiduals kkt_residuals_per_user(const Topology& topology,
                                    const Allocation& alloc,
                                    const std::vector<double>& lambda_per_user,
                                    const std::vector<double>& mu_per_station) {
  KktResiduals r;
  const double band = topology.bandwidth_hz;
  double sum_x = 0.0;
  for (double xi : alloc.x) sum_x += xi;
  r.bandwidth_rel = std::abs(sum_x - band) / band;

  r.compute_rel.assign(topology.stations.size(), 0.0);
  for (size_t j = 0; j < topology.stations.size(); ++j) {
    const StationRecord& st = topology.stations[j];
    if (st.users.empty()) continue;
    double load = 0.0;
    for (int i : st.users) load += alloc.q[i];
    r.compute_rel[j] = (load - st.capacity) / st.capacity;
    r.compute_rel_max = std::max(r.compute_rel_max, std::abs(r.compute_rel[j]));
  }

  for (size_t i = 0; i < topology.users.size(); ++i) {
    const UserRecord& u = topology.users[i];
    if (u.task.data_bits == 0.0 || alloc.x[i] == 0.0) continue;
    const double lambda = lambda_per_user[i];
    const double mu = mu_per_station[u.station];
    const double term_x = user_energy_dx(alloc.x[i], alloc.t[i], u.task, u.gain,
                                         topology.noise_w_per_hz);
    const double scale_x = std::max(std::abs(term_x), lambda);
    if (scale_x > 0.0)
      r.stationarity_x =
          std::max(r.stationarity_x, std::abs(term_x + lambda) / scale_x);

    const double gap = u.task.deadline_s - alloc.t[i];
    const double term_t = user_energy_dt(alloc.x[i], alloc.t[i], u.task, u.gain,
                                         topology.noise_w_per_hz);
    const double dual_t = mu * u.task.cycles / (gap * gap);
    const double scale_t = std::max(std::abs(term_t), dual_t);
    if (scale_t > 0.0)
      r.stationarity_t =
          std::max(r.stationarity_t, std::abs(term_t + dual_t) / scale_t);
  }
  return r;
}

KktResiduals kkt_residuals(const Topology& topology, const Allocation& alloc,
                           const DualState& duals) {
  std::vector<double> lambda_per_user(topology.users.size(), duals.lambda);
  return kkt_residuals_per_user(topology, alloc, lambda_per_user, duals.mu);
}

}  // namespace mecsim
