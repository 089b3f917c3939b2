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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mecsim/baselines.hpp"
#include "mecsim/harness.hpp"
#include "mecsim/oracle.hpp"
#include "mecsim/reuse.hpp"

namespace {

using namespace mecsim;

// "0,1|2,3" -> {{0,1},{2,3}}
std::vector<std::vector<int>> parse_partition(const std::string& text) {
  std::vector<std::vector<int>> groups;
  std::stringstream groups_in(text);
  std::string group;
  while (std::getline(groups_in, group, '|')) {
    std::vector<int> ids;
    std::stringstream ids_in(group);
    std::string id;
    while (std::getline(ids_in, id, ',')) ids.push_back(std::stoi(id));
    if (!ids.empty()) groups.push_back(std::move(ids));
  }
  return groups;
}

struct CommonFlags {
  std::string config;
  std::string fading;
  std::string epsilon_mode;
  std::string reuse_partition;
  std::string algorithms;
  std::uint64_t seed = 0;
  int trials = 0;
  double epsilon = 0.0;
  int jobs = 0;
  bool timing = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON configuration file");
    cmd->add_option("--seed", seed, "scenario seed override");
    cmd->add_option("--trials", trials, "trials per sweep point");
    cmd->add_option("--algorithms", algorithms,
                    "comma-separated algorithm list");
    cmd->add_option("--epsilon", epsilon, "solver stop threshold");
    cmd->add_option("--epsilon-mode", epsilon_mode, "abs or rel")
        ->check(CLI::IsMember({"abs", "rel"}));
    cmd->add_option("--reuse-partition", reuse_partition,
                    "station groups, e.g. \"0,1|2,3\"");
    cmd->add_option("--fading", fading, "assoc, tx-only or off")
        ->check(CLI::IsMember({"assoc", "tx-only", "off"}));
    cmd->add_option("--jobs", jobs, "worker threads");
    cmd->add_flag("--timing", timing,
                  "record wall-clock times (breaks byte-stable output)");
  }

  SweepSpec resolve() const {
    SweepSpec sweep;
    if (!config.empty()) sweep = load_sweep_config_file(config);
    if (seed) sweep.base.seed = seed;
    if (trials) sweep.trials = trials;
    if (epsilon > 0.0) sweep.solve.epsilon = epsilon;
    if (!epsilon_mode.empty())
      sweep.solve.epsilon_mode = epsilon_mode == "rel" ? EpsilonMode::kRelative
                                                       : EpsilonMode::kAbsolute;
    if (!fading.empty()) {
      if (fading == "assoc")
        sweep.base.fading = FadingMode::kAtAssociation;
      else if (fading == "tx-only")
        sweep.base.fading = FadingMode::kTransmissionOnly;
      else
        sweep.base.fading = FadingMode::kOff;
    }
    if (!reuse_partition.empty())
      sweep.reuse_partition = parse_partition(reuse_partition);
    if (!algorithms.empty()) {
      sweep.algorithms.clear();
      std::stringstream in(algorithms);
      std::string name;
      while (std::getline(in, name, ','))
        sweep.algorithms.push_back(algorithm_from_string(name));
    }
    if (jobs) sweep.jobs = jobs;
    if (timing) sweep.timing = true;
    return sweep;
  }
};

void print_allocation(const Topology& topo, const Allocation& a) {
  std::printf("%4s %7s %14s %12s %12s %14s %14s\n", "user", "station",
              "x_Hz", "t_s", "q_cps", "P_W", "E_J");
  for (size_t i = 0; i < topo.users.size(); ++i)
    std::printf("%4zu %7d %14.6g %12.6g %12.6g %14.6g %14.6g\n", i,
                topo.users[i].station, a.x[i], a.t[i], a.q[i], a.power[i],
                a.energy[i]);
}

int cmd_solve(const CommonFlags& flags, const std::string& algorithm,
              const std::string& dump_path) {
  SweepSpec sweep = flags.resolve();
  const Topology topo = generate(sweep.base, 0);
  if (!dump_path.empty()) {
    std::ofstream out(dump_path, std::ios::binary);
    out << topology_to_text(topo);
    if (!out) {
      std::cerr << "cannot write " << dump_path << "\n";
      return 1;
    }
    std::printf("topology written to %s\n", dump_path.c_str());
  }

  const Algorithm alg = algorithm_from_string(algorithm);
  if (alg == Algorithm::kJoint) {
    SolveResult r = solve_joint(topo, sweep.solve);
    print_allocation(topo, r.allocation);
    std::printf("\ntotal energy   %.10g J\n", r.report.total_energy);
    std::printf("iterations     %d\n", r.report.iterations);
    std::printf("signaling      %ld messages\n", r.report.signaling_msgs);
    std::printf("band price     %.6g\n", r.report.duals.lambda);
    std::printf("residuals      bw %.3g  comp %.3g  kkt %.3g\n",
                r.report.residuals.bandwidth_rel,
                r.report.residuals.compute_rel_max,
                std::max(r.report.residuals.stationarity_x,
                         r.report.residuals.stationarity_t));
    std::printf("trajectory    ");
    for (double e : r.report.energy_trajectory) std::printf(" %.10g", e);
    std::printf("\n");
  } else if (alg == Algorithm::kReuse) {
    if (sweep.reuse_partition.empty()) {
      std::cerr << "reuse requires --reuse-partition\n";
      return 1;
    }
    ReuseResult r = allocate_with_reuse(topo, sweep.reuse_partition, sweep.solve);
    print_allocation(topo, r.allocation);
    std::printf("\ntotal energy   %.10g J\n", r.report.total_energy);
    std::printf("iterations     %d\n", r.report.iterations);
    std::printf("beta           %.6g\n", r.duals.beta);
    std::printf("group budgets ");
    for (double b : r.plan.budgets) std::printf(" %.6g", b);
    std::printf("\nprice residual %.3g\n", r.duals.group_price_residual);
  } else {
    BaselineResult r;
    if (alg == Algorithm::kFixed)
      r = allocate_fixed(topo);
    else if (alg == Algorithm::kFixedBandwidth)
      r = allocate_fixed_bandwidth(topo, sweep.solve);
    else if (alg == Algorithm::kFixedBandwidthPerBs)
      r = allocate_fixed_bandwidth_per_bs(topo, sweep.solve);
    else
      r = allocate_fixed_computing(topo, sweep.solve);
    print_allocation(topo, r.allocation);
    std::printf("\ntotal energy   %.10g J\n", r.total_energy);
    if (!r.feasible) {
      std::printf("infeasible for users:");
      for (int i : r.infeasible_users) std::printf(" %d", i);
      std::printf("\n");
    }
  }
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& out_dir) {
  SweepSpec sweep = flags.resolve();
  const std::vector<TrialResult> rows = run_sweep(sweep);
  emit(rows, out_dir);
  int excluded = 0;
  for (const SummaryRow& s : summarize(rows)) excluded += s.trials_excluded;
  std::printf("wrote %s/results.csv and %s/summary.csv (%zu rows)\n",
              out_dir.c_str(), out_dir.c_str(), rows.size());
  if (excluded)
    std::printf("note: %d algorithm rows sat in excluded cells\n", excluded);
  return 0;
}

int cmd_verify(const CommonFlags& flags) {
  SweepSpec sweep = flags.resolve();
  int n = sweep.trials > 0 ? sweep.trials : 20;
  ScenarioSpec spec = sweep.base;
  spec.users = std::min(spec.users, 8);
  spec.stations = std::min(spec.stations, 2);

  OracleSettings settings;
  double worst = 0.0;
  for (int trial = 0; trial < n; ++trial) {
    const Topology topo = generate(spec, static_cast<std::uint64_t>(trial));
    SolveResult fast = solve_joint(topo, sweep.solve);
    OracleResult slow = solve_reference(topo, settings);
    const double gap = std::abs(fast.report.total_energy - slow.energy) /
                       slow.energy;
    worst = std::max(worst, gap);
    std::printf("instance %3d  solver %.10g J  reference %.10g J  gap %.3g\n",
                trial, fast.report.total_energy, slow.energy, gap);
  }
  std::printf("worst relative gap %.3g over %d instances\n", worst, n);
  const bool ok = worst <= 1e-4;
  std::printf("%s\n", ok ? "verification PASSED" : "verification FAILED");
  return ok ? 0 : 1;
}

int cmd_convergence(const CommonFlags& flags) {
  SweepSpec sweep = flags.resolve();
  const int trials = sweep.trials > 0 ? sweep.trials : 50;
  struct Case {
    int stations, users;
  };
  const std::vector<Case> cases = {{4, 32}, {4, 64}, {8, 64}, {16, 64}};
  std::printf("%8s %6s %6s %12s %14s\n", "stations", "users", "K_j",
              "mean_iters", "mean_signaling");
  for (const Case& c : cases) {
    ScenarioSpec spec = sweep.base;
    spec.stations = c.stations;
    spec.users = c.users;
    double iter_sum = 0.0, signaling_sum = 0.0;
    int ok = 0;
    for (int trial = 0; trial < trials; ++trial) {
      try {
        const Topology topo = generate(spec, static_cast<std::uint64_t>(trial));
        SolveResult r = solve_joint(topo, sweep.solve);
        iter_sum += r.report.iterations;
        signaling_sum += static_cast<double>(r.report.signaling_msgs);
        ++ok;
      } catch (const std::exception&) {
      }
    }
    std::printf("%8d %6d %6.1f %12.3f %14.1f\n", c.stations, c.users,
                static_cast<double>(c.users) / c.stations,
                ok ? iter_sum / ok : 0.0, ok ? signaling_sum / ok : 0.0);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-cell edge-computing resource allocation simulator"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string algorithm = "joint";
  std::string dump_path;
  std::string out_dir = "out";

  CLI::App* solve = app.add_subcommand("solve", "solve one instance");
  flags.add_to(solve);
  solve->add_option("--algorithm", algorithm, "allocator to run");
  solve->add_option("--dump-topology", dump_path,
                    "write the drawn topology to a fixture file");

  CLI::App* sweep = app.add_subcommand("sweep", "run a sweep grid to CSV");
  flags.add_to(sweep);
  sweep->add_option("--out", out_dir, "output directory");

  CLI::App* verify =
      app.add_subcommand("verify", "compare solver against the reference");
  flags.add_to(verify);

  CLI::App* convergence =
      app.add_subcommand("convergence", "iteration statistics per cell size");
  flags.add_to(convergence);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(flags, algorithm, dump_path);
    if (sweep->parsed()) return cmd_sweep(flags, out_dir);
    if (verify->parsed()) return cmd_verify(flags);
    if (convergence->parsed()) return cmd_convergence(flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
