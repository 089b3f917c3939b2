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

#include "mecsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mecsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Euclidean projection onto { p : sum p = target, p >= lb } by the standard
// clipped uniform shift. Bisection localizes the active set, then the shift
// is recomputed in closed form so the sum constraint holds to rounding.
void project_capped_simplex(std::vector<double>& p, const std::vector<double>& lb,
                            double target) {
  const size_t n = p.size();
  if (n == 0) return;
  double lb_sum = 0.0, lo = kInf, hi = -kInf;
  for (size_t i = 0; i < n; ++i) {
    lb_sum += lb[i];
    lo = std::min(lo, p[i] - target);
    hi = std::max(hi, p[i]);
  }
  if (!(lb_sum < target))
    throw std::domain_error("project_capped_simplex: bounds exceed target");

  auto shifted_sum = [&](double nu) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += std::max(p[i] - nu, lb[i]);
    return s;
  };
  lo -= 1.0;  // shifted_sum(lo) > target
  hi += 1.0;  // shifted_sum(hi) = lb_sum < target
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (shifted_sum(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  const double nu_guess = 0.5 * (lo + hi);
  double free_sum = 0.0;
  int free_count = 0;
  double clipped_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (p[i] - nu_guess > lb[i]) {
      free_sum += p[i];
      ++free_count;
    } else {
      clipped_sum += lb[i];
    }
  }
  double nu = nu_guess;
  if (free_count > 0) nu = (free_sum + clipped_sum - target) / free_count;
  for (size_t i = 0; i < n; ++i) p[i] = std::max(p[i] - nu, lb[i]);
}

struct Problem {
  const Topology* topo = nullptr;
  double band = 0.0;
  // Per-user lower bounds in normalized coordinates and per-station index
  // lists for the compute blocks.
  std::vector<double> s_lb;              // min share of band
  std::vector<double> v_lb;              // min share of station capacity
  std::vector<std::vector<int>> blocks;  // station user lists (non-empty only)
  std::vector<int> s_active;             // users with payload to transmit
  double s_target = 1.0;                 // band left for the active users
};

struct Point {
  std::vector<double> s;  // x_i / B
  std::vector<double> v;  // q_i / C_j  (load coordinates)
};

double objective(const Problem& pb, const Point& p) {
  const Topology& topo = *pb.topo;
  double sum = 0.0;
  for (size_t i = 0; i < topo.users.size(); ++i) {
    const UserRecord& u = topo.users[i];
    if (u.task.data_bits == 0.0) continue;
    const double x = pb.band * p.s[i];
    const double cap = topo.stations[u.station].capacity;
    const double t = u.task.deadline_s - u.task.cycles / (cap * p.v[i]);
    if (!(x > 0.0) || !(t > 0.0)) return kInf;
    sum += user_energy(x, t, u.task, u.gain, topo.noise_w_per_hz);
    if (!std::isfinite(sum)) return kInf;
  }
  return sum;
}

void gradient(const Problem& pb, const Point& p, Point& g) {
  const Topology& topo = *pb.topo;
  for (size_t i = 0; i < topo.users.size(); ++i) {
    const UserRecord& u = topo.users[i];
    if (u.task.data_bits == 0.0) {
      g.s[i] = 0.0;
      g.v[i] = 0.0;
      continue;
    }
    const double x = pb.band * p.s[i];
    const double cap = topo.stations[u.station].capacity;
    const double q = cap * p.v[i];
    const double t = u.task.deadline_s - u.task.cycles / q;
    double dx = user_energy_dx(x, t, u.task, u.gain, topo.noise_w_per_hz);
    double dt = user_energy_dt(x, t, u.task, u.gain, topo.noise_w_per_hz);
    if (!std::isfinite(dx)) dx = -1e300;
    if (!std::isfinite(dt)) dt = -1e300;
    g.s[i] = pb.band * dx;
    // t = D - (W/C)/v  =>  dt/dv = (W/C)/v^2
    g.v[i] = dt * (u.task.cycles / cap) / (p.v[i] * p.v[i]);
  }
}

void project(const Problem& pb, Point& p) {
  for (size_t i = 0; i < p.s.size(); ++i)
    if (!(pb.topo->users[i].task.data_bits > 0.0)) p.s[i] = pb.s_lb[i];
  std::vector<double> sub(pb.s_active.size()), sub_lb(pb.s_active.size());
  for (size_t k = 0; k < pb.s_active.size(); ++k) {
    sub[k] = p.s[pb.s_active[k]];
    sub_lb[k] = pb.s_lb[pb.s_active[k]];
  }
  project_capped_simplex(sub, sub_lb, pb.s_target);
  for (size_t k = 0; k < pb.s_active.size(); ++k) p.s[pb.s_active[k]] = sub[k];
  for (const auto& block : pb.blocks) {
    std::vector<double> sub(block.size()), sub_lb(block.size());
    for (size_t k = 0; k < block.size(); ++k) {
      sub[k] = p.v[block[k]];
      sub_lb[k] = pb.v_lb[block[k]];
    }
    project_capped_simplex(sub, sub_lb, 1.0);
    for (size_t k = 0; k < block.size(); ++k) p.v[block[k]] = sub[k];
  }
}

// Normalized stationarity dispersion: at the optimum every user sees the
// same implied band price and every station user the same compute price.
double kkt_dispersion(const Problem& pb, const Point& p) {
  const Topology& topo = *pb.topo;
  double worst = 0.0;

  std::vector<double> price_x;
  for (size_t i = 0; i < topo.users.size(); ++i) {
    const UserRecord& u = topo.users[i];
    if (u.task.data_bits == 0.0) continue;
    const double x = pb.band * p.s[i];
    const double cap = topo.stations[u.station].capacity;
    const double t = u.task.deadline_s - u.task.cycles / (cap * p.v[i]);
    price_x.push_back(
        -user_energy_dx(x, t, u.task, u.gain, topo.noise_w_per_hz));
  }
  if (price_x.size() > 1) {
    double mean = 0.0;
    for (double v : price_x) mean += v;
    mean /= static_cast<double>(price_x.size());
    for (double v : price_x)
      worst = std::max(worst, std::abs(v - mean) / std::max(mean, 1e-300));
  }

  for (const auto& block : pb.blocks) {
    std::vector<double> price_t;
    for (int i : block) {
      const UserRecord& u = topo.users[i];
      if (u.task.data_bits == 0.0) continue;
      const double x = pb.band * p.s[i];
      const double cap = topo.stations[u.station].capacity;
      const double q = cap * p.v[i];
      const double t = u.task.deadline_s - u.task.cycles / q;
      const double gap = u.task.deadline_s - t;
      // mu implied by the compute stationarity of user i.
      price_t.push_back(-user_energy_dt(x, t, u.task, u.gain,
                                        topo.noise_w_per_hz) *
                        gap * gap / u.task.cycles);
    }
    if (price_t.size() > 1) {
      double mean = 0.0;
      for (double v : price_t) mean += v;
      mean /= static_cast<double>(price_t.size());
      for (double v : price_t)
        worst = std::max(worst, std::abs(v - mean) / std::max(mean, 1e-300));
    }
  }
  return worst;
}

double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.s.size(); ++i) s += a.s[i] * b.s[i];
  for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

struct RunOutcome {
  Point point;
  double energy = kInf;
  int iterations = 0;
  bool converged = false;
  double kkt = kInf;
};

RunOutcome descend(const Problem& pb, Point p, const OracleSettings& settings) {
  RunOutcome out;
  const size_t n = p.s.size();
  project(pb, p);
  double fp = objective(pb, p);
  Point g{std::vector<double>(n), std::vector<double>(n)};
  gradient(pb, p, g);

  double gmax = 1e-300, pmax = 1e-300;
  for (size_t i = 0; i < n; ++i) {
    gmax = std::max({gmax, std::abs(g.s[i]), std::abs(g.v[i])});
    pmax = std::max({pmax, std::abs(p.s[i]), std::abs(p.v[i])});
  }
  double alpha = 0.1 * pmax / gmax;

  Point cand{std::vector<double>(n), std::vector<double>(n)};
  Point gc{std::vector<double>(n), std::vector<double>(n)};
  Point diff{std::vector<double>(n), std::vector<double>(n)};

  int stall = 0;
  int it = 0;
  for (; it < settings.max_iterations; ++it) {
    bool accepted = false;
    double fc = fp;
    for (int bt = 0; bt < 90; ++bt) {
      for (size_t i = 0; i < n; ++i) {
        cand.s[i] = p.s[i] - alpha * g.s[i];
        cand.v[i] = p.v[i] - alpha * g.v[i];
      }
      project(pb, cand);
      for (size_t i = 0; i < n; ++i) {
        diff.s[i] = cand.s[i] - p.s[i];
        diff.v[i] = cand.v[i] - p.v[i];
      }
      const double slope = dot(g, diff);
      if (slope >= 0.0) break;  // no descent direction left at this scale
      fc = objective(pb, cand);
      if (fc <= fp + 1e-4 * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    gradient(pb, cand, gc);
    for (size_t i = 0; i < n; ++i) {
      diff.s[i] = cand.s[i] - p.s[i];
      diff.v[i] = cand.v[i] - p.v[i];
    }
    Point gdiff{std::vector<double>(n), std::vector<double>(n)};
    for (size_t i = 0; i < n; ++i) {
      gdiff.s[i] = gc.s[i] - g.s[i];
      gdiff.v[i] = gc.v[i] - g.v[i];
    }
    const double num = dot(diff, diff);
    const double den = dot(diff, gdiff);
    alpha = den > 0.0 ? std::max(num / den, 1e-30) : alpha * 2.0;

    const double rel_drop = (fp - fc) / std::max(fc, 1e-300);
    stall = rel_drop < settings.tolerance ? stall + 1 : 0;
    p = cand;
    fp = fc;
    std::swap(g.s, gc.s);
    std::swap(g.v, gc.v);

    if (stall >= 8 || (it % 64) == 63) {
      const double kkt = kkt_dispersion(pb, p);
      if (kkt <= settings.kkt_tol) {
        out.converged = true;
        out.kkt = kkt;
        break;
      }
      if (stall >= 400) break;  // no progress and KKT stuck
    }
  }
  out.point = std::move(p);
  out.energy = fp;
  out.iterations = it;
  if (!out.converged) {
    // A stalled line search at the optimum is still convergence; judge by
    // the stationarity dispersion of the final point.
    out.kkt = kkt_dispersion(pb, out.point);
    out.converged = out.kkt <= settings.kkt_tol;
  }
  return out;
}

// Small deterministic generator for restart perturbations.
struct Mix64 {
  std::uint64_t state;
  double next01() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }
};

}  // namespace

OracleResult solve_reference(const Topology& topology,
                             const OracleSettings& settings) {
  validate_topology(topology);
  const auto verdicts = check_feasibility(topology);
  for (const StationFeasibility& v : verdicts)
    if (!v.feasible)
      throw std::domain_error("solve_reference: station " +
                              std::to_string(v.station) + " infeasible");

  const size_t n = topology.users.size();
  Problem pb;
  pb.topo = &topology;
  pb.band = topology.bandwidth_hz;
  pb.s_lb.assign(n, 1e-12);
  pb.v_lb.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    if (topology.users[i].task.data_bits > 0.0)
      pb.s_active.push_back(static_cast<int>(i));
    else
      pb.s_target -= pb.s_lb[i];
  }
  if (pb.s_active.empty())
    throw std::domain_error("solve_reference: no user transmits any data");
  for (size_t j = 0; j < topology.stations.size(); ++j) {
    const StationRecord& st = topology.stations[j];
    if (st.users.empty()) continue;
    pb.blocks.push_back(st.users);
    for (int i : st.users) {
      const TaskSpec& task = topology.users[i].task;
      // Strictly above the zero-transmission-time load.
      pb.v_lb[i] = task.cycles / (task.deadline_s * st.capacity) * (1.0 + 1e-12);
    }
  }

  // Start at the equal/proportional split; later restarts perturb it.
  std::vector<double> q0 = initial_compute_split(topology);
  Point start{std::vector<double>(n, 1.0 / static_cast<double>(n)),
              std::vector<double>(n, 0.0)};
  for (size_t i = 0; i < n; ++i) {
    const UserRecord& u = topology.users[i];
    start.v[i] = q0[i] / topology.stations[u.station].capacity;
  }

  OracleResult result;
  Mix64 rng{settings.seed};
  RunOutcome best;
  int total_iters = 0;
  const int restarts = std::max(1, settings.restarts);
  for (int r = 0; r < restarts; ++r) {
    Point p = start;
    if (r > 0) {
      for (size_t i = 0; i < n; ++i) {
        p.s[i] *= std::exp(0.8 * (rng.next01() - 0.5));
        p.v[i] *= std::exp(0.8 * (rng.next01() - 0.5));
      }
    }
    RunOutcome run = descend(pb, std::move(p), settings);
    total_iters += run.iterations;
    result.restart_energies.push_back(run.energy);
    if (run.energy < best.energy) best = std::move(run);
  }

  result.energy = best.energy;
  result.converged = best.converged;
  result.iterations = total_iters;
  result.kkt_residual = best.kkt;

  Allocation a;
  a.x.assign(n, 0.0);
  a.t.assign(n, 0.0);
  a.q.assign(n, 0.0);
  a.power.assign(n, 0.0);
  a.energy.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const UserRecord& u = topology.users[i];
    const double cap = topology.stations[u.station].capacity;
    a.x[i] = pb.band * best.point.s[i];
    a.q[i] = cap * best.point.v[i];
    a.t[i] = u.task.deadline_s - u.task.cycles / a.q[i];
    if (u.task.data_bits == 0.0) continue;
    a.power[i] = min_power(a.x[i], a.t[i], u.task, u.gain, topology.noise_w_per_hz);
    a.energy[i] = a.power[i] * a.t[i];
  }
  result.allocation = std::move(a);
  return result;
}

OracleGroupedResult solve_reference_grouped(
    const Topology& topology, const std::vector<std::vector<int>>& groups,
    const OracleSettings& settings) {
  OracleGroupedResult out;
  out.base = solve_reference(topology, settings);
  out.budgets.assign(groups.size(), 0.0);
  for (size_t f = 0; f < groups.size(); ++f)
    for (int j : groups[f])
      for (int i : topology.stations[j].users)
        out.budgets[f] += out.base.allocation.x[i];
  return out;
}

}  // namespace mecsim
