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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "mecsim/baselines.hpp"
#include "mecsim/scenario.hpp"
#include "mecsim/solver.hpp"
#include "test_util.hpp"

using namespace mecsim;
using namespace mecsim::testutil;

TEST_CASE("bandwidth stationarity residual") {
  TaskSpec task{5e5, 1e9, 0.5};
  const double h = 1e-8, t = 0.25, lambda = 1e-10;

  SUBCASE("tends to the price as bandwidth grows") {
    const double g = bandwidth_stationarity(1e14, t, task, h, kNoise, lambda);
    CHECK(g == doctest::Approx(lambda).epsilon(1e-4));
    CHECK(g > 0.0);
  }
  SUBCASE("root, monotonicity and the scalar oracle") {
    const double root =
        user_bandwidth_for_price(t, task, h, kNoise, lambda);
    CHECK(std::abs(bandwidth_stationarity(root, t, task, h, kNoise, lambda)) <
          1e-6 * lambda);
    CHECK(bandwidth_stationarity(root * 1.001, t, task, h, kNoise, lambda) >
          0.0);
    CHECK(bandwidth_stationarity(root * 0.999, t, task, h, kNoise, lambda) <
          0.0);

    // Independent 1-D check: the root minimizes E(x, t) + lambda*x.
    auto lagrangian = [&](double x) {
      return user_energy(x, t, task, h, kNoise) + lambda * x;
    };
    const double oracle = golden_section_min(lagrangian, root / 64, root * 64);
    CHECK(rel_diff(root, oracle) < 1e-6);
  }
}

TEST_CASE("per-user bandwidth for a price") {
  TaskSpec task{5e5, 1e9, 0.5};
  const double h = 1e-8, t = 0.25;

  SUBCASE("deterministic and symmetric") {
    const double a = user_bandwidth_for_price(t, task, h, kNoise, 1e-10);
    const double b = user_bandwidth_for_price(t, task, h, kNoise, 1e-10);
    CHECK(a == b);
  }
  SUBCASE("strictly shrinking in the price") {
    double prev = user_bandwidth_for_price(t, task, h, kNoise, 1e-12);
    for (double lambda = 2e-12; lambda < 1e-6; lambda *= 2.0) {
      const double x = user_bandwidth_for_price(t, task, h, kNoise, lambda);
      CHECK(x < prev);
      prev = x;
    }
  }
  SUBCASE("zero payload claims nothing") {
    TaskSpec idle{0.0, 1e9, 0.5};
    CHECK(user_bandwidth_for_price(t, idle, h, kNoise, 1e-10) == 0.0);
  }
}

TEST_CASE("system bandwidth pass") {
  SUBCASE("single claimant gets the whole band") {
    auto topo = make_topology({{1e-10}}, 1);
    std::vector<double> t{0.3};
    auto split = allocate_bandwidth(topo, t);
    CHECK(rel_diff(split.x[0], topo.bandwidth_hz) < 1e-9);
    CHECK(split.lambda > 0.0);
    CHECK(split.converged);
  }
  SUBCASE("identical users split evenly") {
    auto topo = make_topology({{1e-10}, {1e-10}, {1e-10}, {1e-10}}, 1);
    std::vector<double> t(4, 0.3);
    auto split = allocate_bandwidth(topo, t);
    for (int i = 1; i < 4; ++i) CHECK(split.x[i] == split.x[0]);
    CHECK(split.x[0] == doctest::Approx(topo.bandwidth_hz / 4).epsilon(1e-9));
  }
  SUBCASE("heterogeneous trio matches a simplex grid search") {
    auto topo = make_topology({{1e-9, 4e5}, {1e-10, 5e5}, {3e-11, 7e5}}, 1);
    std::vector<double> t{0.2, 0.3, 0.25};
    auto split = allocate_bandwidth(topo, t);
    CHECK(split.residual < 1e-8);

    auto energy_at = [&](double x0, double x1, double x2) {
      double sum = 0.0;
      const double xs[3] = {x0, x1, x2};
      for (int i = 0; i < 3; ++i)
        sum += user_energy(xs[i], t[i], topo.users[i].task, topo.users[i].gain,
                           kNoise);
      return sum;
    };
    const double band = topo.bandwidth_hz;
    // Coarse-to-fine search over the two free coordinates.
    double best0 = band / 3, best1 = band / 3, radius = band / 2;
    double best = energy_at(best0, best1, band - best0 - best1);
    for (int level = 0; level < 6; ++level) {
      const double lo0 = std::max(1.0, best0 - radius);
      const double hi0 = std::min(band - 2.0, best0 + radius);
      const double lo1 = std::max(1.0, best1 - radius);
      const double hi1 = std::min(band - 2.0, best1 + radius);
      for (int a = 0; a <= 80; ++a) {
        for (int b = 0; b <= 80; ++b) {
          const double x0 = lo0 + (hi0 - lo0) * a / 80.0;
          const double x1 = lo1 + (hi1 - lo1) * b / 80.0;
          const double x2 = band - x0 - x1;
          if (x2 <= 0.0) continue;
          const double e = energy_at(x0, x1, x2);
          if (e < best) {
            best = e;
            best0 = x0;
            best1 = x1;
          }
        }
      }
      radius /= 16.0;
    }
    const double solver_energy =
        energy_at(split.x[0], split.x[1], split.x[2]);
    CHECK(solver_energy <= best * (1.0 + 1e-9));
    CHECK(rel_diff(solver_energy, best) < 1e-3);
  }
  SUBCASE("per-station sums are observable per probe") {
    auto topo = make_topology({{1e-10, 5e5, 1e9, 0.5, 0},
                               {2e-10, 5e5, 1e9, 0.5, 1}},
                              2);
    std::vector<double> t(2, 0.3);
    int probes = 0;
    BandwidthProbeObserver obs = [&](double, const std::vector<double>& sums) {
      ++probes;
      CHECK(sums.size() == 2);
      CHECK(sums[0] > 0.0);
      CHECK(sums[1] > 0.0);
    };
    auto split = allocate_bandwidth(topo, t, {}, &obs);
    CHECK(probes == split.probes);
  }
}

TEST_CASE("compute stationarity residual") {
  TaskSpec task{5e5, 1e9, 0.5};
  const double h = 1e-8, x = 1e6;

  SUBCASE("negative everywhere at zero price") {
    for (double t : {0.01, 0.1, 0.25, 0.4, 0.49})
      CHECK(compute_stationarity(t, x, task, h, kNoise, 0.0) < 0.0);
  }
  SUBCASE("root, sign flip and the scalar oracle") {
    const double mu = 1e-13;
    auto topo = make_topology({{h, task.data_bits, task.cycles,
                                task.deadline_s, 0}},
                              1);
    // Locate the root via the public bisection on a one-user station by
    // reconstructing it from allocate_compute at the capacity where the
    // optimum sits; here check signs around a golden-section oracle instead.
    auto lagrangian = [&](double t) {
      return user_energy(x, t, task, h, kNoise) +
             mu * task.cycles / (task.deadline_s - t);
    };
    const double oracle =
        golden_section_min(lagrangian, 1e-4 * task.deadline_s,
                           task.deadline_s * (1.0 - 1e-9));
    CHECK(std::abs(compute_stationarity(oracle, x, task, h, kNoise, mu)) <
          1e-4 * mu * task.cycles /
              ((task.deadline_s - oracle) * (task.deadline_s - oracle)));
    CHECK(compute_stationarity(oracle * 1.001, x, task, h, kNoise, mu) > 0.0);
    CHECK(compute_stationarity(oracle * 0.999, x, task, h, kNoise, mu) < 0.0);
  }
}

TEST_CASE("per-station compute pass") {
  SUBCASE("lone user receives the whole server") {
    const double cap = 1e10;
    auto topo = make_topology({{1e-10, 5e5, 2e9, 0.5, 0}}, 1, cap);
    std::vector<double> x{1e7};
    auto split = allocate_compute(topo, 0, x);
    CHECK(split.t[0] == doctest::Approx(0.5 - 2e9 / cap).epsilon(1e-9));
    CHECK(split.mu > 0.0);
    CHECK(split.converged);
  }
  SUBCASE("identical users share evenly") {
    const double cap = 1e10;
    auto topo = make_topology({{1e-10, 5e5, 1e9, 0.5, 0},
                               {1e-10, 5e5, 1e9, 0.5, 0},
                               {1e-10, 5e5, 1e9, 0.5, 0}},
                              1, cap);
    std::vector<double> x(3, 3e6);
    auto split = allocate_compute(topo, 0, x);
    for (int k = 0; k < 3; ++k) {
      CHECK(split.q[k] == doctest::Approx(cap / 3).epsilon(1e-9));
      CHECK(split.t[k] == doctest::Approx(0.5 - 3e9 / cap).epsilon(1e-9));
    }
  }
  SUBCASE("heterogeneous trio matches a constrained grid search") {
    const double cap = 2e10;
    auto topo = make_topology({{1e-9, 4e5, 1e9, 0.5, 0},
                               {1e-10, 5e5, 2e9, 0.5, 0},
                               {3e-11, 7e5, 3e9, 0.5, 0}},
                              1, cap);
    std::vector<double> x{4e6, 3e6, 3e6};
    auto split = allocate_compute(topo, 0, x);
    CHECK(split.residual < 1e-7);

    const double d = 0.5;
    auto energy_at = [&](double q0, double q1) {
      // Third share fixed by the capacity; reject infeasible corners.
      const double q2 = cap - q0 - q1;
      const TaskSpec& t0 = topo.users[0].task;
      const TaskSpec& t1 = topo.users[1].task;
      const TaskSpec& t2 = topo.users[2].task;
      if (q0 <= t0.cycles / d || q1 <= t1.cycles / d || q2 <= t2.cycles / d)
        return std::numeric_limits<double>::infinity();
      double sum = 0.0;
      sum += user_energy(x[0], d - t0.cycles / q0, t0, topo.users[0].gain,
                         kNoise);
      sum += user_energy(x[1], d - t1.cycles / q1, t1, topo.users[1].gain,
                         kNoise);
      sum += user_energy(x[2], d - t2.cycles / q2, t2, topo.users[2].gain,
                         kNoise);
      return sum;
    };
    const double q0_min = topo.users[0].task.cycles / d * (1 + 1e-9);
    const double q1_min = topo.users[1].task.cycles / d * (1 + 1e-9);
    double best0 = cap / 3, best1 = cap / 3, radius = cap / 2;
    double best = energy_at(best0, best1);
    for (int level = 0; level < 6; ++level) {
      const double lo0 = std::max(q0_min, best0 - radius);
      const double hi0 = best0 + radius;
      const double lo1 = std::max(q1_min, best1 - radius);
      const double hi1 = best1 + radius;
      for (int a = 0; a <= 80; ++a) {
        for (int b = 0; b <= 80; ++b) {
          const double q0 = lo0 + (hi0 - lo0) * a / 80.0;
          const double q1 = lo1 + (hi1 - lo1) * b / 80.0;
          const double e = energy_at(q0, q1);
          if (e < best) {
            best = e;
            best0 = q0;
            best1 = q1;
          }
        }
      }
      radius /= 16.0;
    }
    double solver_energy = 0.0;
    for (int k = 0; k < 3; ++k)
      solver_energy += user_energy(x[k], split.t[k], topo.users[k].task,
                                   topo.users[k].gain, kNoise);
    CHECK(solver_energy <= best * (1.0 + 1e-9));
    CHECK(rel_diff(solver_energy, best) < 1e-3);
  }
  SUBCASE("load shrinks as the price rises") {
    const double cap = 1e10;
    auto topo = make_topology({{1e-10, 5e5, 1e9, 0.5, 0},
                               {2e-10, 6e5, 2e9, 0.5, 0}},
                              1, cap);
    std::vector<double> x(2, 5e6);
    // Observed indirectly: capacity halved forces a higher price.
    auto split_full = allocate_compute(topo, 0, x);
    topo.stations[0].capacity = 8e9;
    auto split_tight = allocate_compute(topo, 0, x);
    CHECK(split_tight.mu > split_full.mu);
  }
  SUBCASE("infeasible station rejected with slack") {
    auto topo = make_topology({{1e-10, 5e5, 6e10, 0.5, 0}}, 1, 1e11);
    std::vector<double> x{1e7};
    CHECK_THROWS_AS(allocate_compute(topo, 0, x), std::domain_error);
  }
}

TEST_CASE("joint solve") {
  SUBCASE("fully symmetric instance is solved in one round") {
    // One user per station, identical everything: the seed split is already
    // optimal and equals the fixed baseline.
    auto topo = make_topology({{1e-10, 5e5, 1e9, 0.5, 0},
                               {1e-10, 5e5, 1e9, 0.5, 1}},
                              2, 2e10);
    SolveResult r = solve_joint(topo);
    BaselineResult fixed = allocate_fixed(topo);
    CHECK(r.report.iterations == 1);
    for (int i = 0; i < 2; ++i) {
      CHECK(rel_diff(r.allocation.x[i], fixed.allocation.x[i]) < 1e-9);
      CHECK(rel_diff(r.allocation.t[i], fixed.allocation.t[i]) < 1e-9);
    }
    CHECK(rel_diff(r.report.total_energy, fixed.total_energy) < 1e-12);
  }
  SUBCASE("trajectory is monotone and residuals are tight") {
    ScenarioSpec spec;
    spec.users = 12;
    spec.stations = 3;
    spec.seed = 99;
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
      const Topology topo = generate(spec, trial);
      SolveResult r = solve_joint(topo);
      CHECK(r.report.converged);
      CHECK(r.report.iterations >= 1);
      const auto& traj = r.report.energy_trajectory;
      for (size_t k = 1; k < traj.size(); ++k)
        CHECK(traj[k] <= traj[k - 1] + 1e-12);
      CHECK(r.report.residuals.bandwidth_rel < 1e-8);
      CHECK(r.report.residuals.compute_rel_max < 1e-6);
      CHECK(r.report.residuals.stationarity_x < 1e-6);
      CHECK(r.report.residuals.stationarity_t < 1e-6);
      CHECK(r.report.duals.lambda > 0.0);
      for (size_t j = 0; j < topo.stations.size(); ++j)
        if (!topo.stations[j].users.empty())
          CHECK(r.report.duals.mu[j] > 0.0);
      // The transmission exactly fills the time budget.
      for (size_t i = 0; i < topo.users.size(); ++i) {
        const UserRecord& u = topo.users[i];
        const double rate = achievable_rate(r.allocation.x[i],
                                            r.allocation.power[i], u.gain,
                                            topo.noise_w_per_hz);
        CHECK(rel_diff(rate * r.allocation.t[i], u.task.data_bits) < 1e-9);
      }
    }
  }
  SUBCASE("signaling accounting") {
    ScenarioSpec spec;
    spec.users = 8;
    spec.stations = 2;
    spec.seed = 5;
    const Topology topo = generate(spec, 0);
    SolveResult r = solve_joint(topo);
    CHECK(r.report.signaling_msgs > 0);
    CHECK(r.report.signaling_msgs % topo.stations.size() == 0);
  }
  SUBCASE("scale covariance in the channel gains") {
    ScenarioSpec spec;
    spec.users = 6;
    spec.stations = 2;
    spec.seed = 31;
    Topology topo = generate(spec, 0);
    // Relative stop rule so both solves cut off at the same point of the
    // scaled trajectory.
    SolveOptions opts;
    opts.epsilon = 1e-9;
    opts.epsilon_mode = EpsilonMode::kRelative;
    SolveResult base = solve_joint(topo, opts);
    const double c = 8.0;
    for (UserRecord& u : topo.users) u.gain *= c;
    SolveResult scaled = solve_joint(topo, opts);
    CHECK(rel_diff(scaled.report.total_energy, base.report.total_energy / c) <
          1e-6);
    for (size_t i = 0; i < topo.users.size(); ++i) {
      CHECK(rel_diff(scaled.allocation.x[i], base.allocation.x[i]) < 1e-6);
      CHECK(rel_diff(scaled.allocation.t[i], base.allocation.t[i]) < 1e-6);
    }
  }
  SUBCASE("zero-payload user gets zero bandwidth and energy") {
    auto topo = make_topology({{1e-10, 5e5, 1e9, 0.5, 0},
                               {1e-10, 0.0, 1e9, 0.5, 0}},
                              1, 1e10);
    SolveResult r = solve_joint(topo);
    CHECK(r.allocation.x[1] == 0.0);
    CHECK(r.allocation.energy[1] == 0.0);
    CHECK(rel_diff(r.allocation.x[0], topo.bandwidth_hz) < 1e-9);
    // The idle user still occupies its minimum compute share.
    CHECK(r.allocation.q[1] == doctest::Approx(1e9 / 0.5).epsilon(1e-6));
  }
  SUBCASE("infeasible station rejected") {
    auto topo = make_topology({{1e-10, 5e5, 6e10, 0.5, 0}}, 1, 1e11);
    CHECK_THROWS_AS(solve_joint(topo), std::domain_error);
  }
  SUBCASE("iteration cap reported as non-convergence") {
    ScenarioSpec spec;
    spec.users = 12;
    spec.stations = 2;
    spec.seed = 64;
    const Topology topo = generate(spec, 0);
    SolveOptions opts;
    opts.max_outer = 1;
    SolveResult r = solve_joint(topo, opts);
    CHECK_FALSE(r.report.converged);
    CHECK_FALSE(r.report.message.empty());
    CHECK(r.report.iterations == 1);
  }
}

TEST_CASE("kkt residual probes") {
  ScenarioSpec spec;
  spec.users = 8;
  spec.stations = 2;
  spec.seed = 123;
  const Topology topo = generate(spec, 0);
  SolveResult r = solve_joint(topo);
  CHECK(r.report.residuals.max_normalized() < 1e-6);

  SUBCASE("bandwidth perturbation shows up in the primal residual") {
    Allocation bumped = r.allocation;
    bumped.x[0] *= 1.01;
    auto res = kkt_residuals(topo, bumped, r.report.duals);
    CHECK(res.bandwidth_rel ==
          doctest::Approx(0.01 * r.allocation.x[0] / topo.bandwidth_hz)
              .epsilon(1e-3));
  }
  SUBCASE("pushing a time budget toward the deadline overloads its server") {
    Allocation bumped = r.allocation;
    const int i = topo.stations[0].users.front();
    const TaskSpec& task = topo.users[i].task;
    bumped.t[i] = 0.5 * (bumped.t[i] + task.deadline_s);
    bumped.q[i] = task.cycles / (task.deadline_s - bumped.t[i]);
    auto res = kkt_residuals(topo, bumped, r.report.duals);
    CHECK(res.compute_rel[0] > 0.0);
  }
}

TEST_CASE("dual monotonicity of the aggregate responses") {
  auto topo = make_topology({{1e-9, 4e5}, {1e-10, 5e5}, {3e-11, 7e5}}, 1);
  std::vector<double> t{0.2, 0.3, 0.25};
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda = 1e-12; lambda < 1e-7; lambda *= 4.0) {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
      sum += user_bandwidth_for_price(t[i], topo.users[i].task,
                                      topo.users[i].gain, kNoise, lambda);
    CHECK(sum < prev);
    prev = sum;
  }
}
