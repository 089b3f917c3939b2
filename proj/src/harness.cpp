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

#include "mecsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "mecsim/baselines.hpp"
#include "mecsim/reuse.hpp"

namespace mecsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void primal_residuals(const Topology& topo, const Allocation& a,
                      double& bw_rel, double& comp_rel) {
  double sum_x = 0.0;
  for (double xi : a.x) sum_x += xi;
  bw_rel = std::abs(sum_x - topo.bandwidth_hz) / topo.bandwidth_hz;
  comp_rel = 0.0;
  for (const StationRecord& st : topo.stations) {
    if (st.users.empty()) continue;
    double load = 0.0;
    for (int i : st.users) load += a.q[i];
    comp_rel = std::max(comp_rel, std::abs(load - st.capacity) / st.capacity);
  }
}

// Fixed-size pool running fn(i) for i in [0, count); results must be written
// into pre-sized slots so the output is independent of scheduling.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kJoint: return "joint";
    case Algorithm::kFixed: return "fixed";
    case Algorithm::kFixedBandwidth: return "fixed_bandwidth";
    case Algorithm::kFixedBandwidthPerBs: return "fixed_bandwidth_per_bs";
    case Algorithm::kFixedComputing: return "fixed_computing";
    case Algorithm::kReuse: return "reuse";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "joint") return Algorithm::kJoint;
  if (name == "fixed") return Algorithm::kFixed;
  if (name == "fixed_bandwidth") return Algorithm::kFixedBandwidth;
  if (name == "fixed_bandwidth_per_bs") return Algorithm::kFixedBandwidthPerBs;
  if (name == "fixed_computing") return Algorithm::kFixedComputing;
  if (name == "reuse") return Algorithm::kReuse;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string to_string(SweepParameter parameter) {
  switch (parameter) {
    case SweepParameter::kNone: return "none";
    case SweepParameter::kDataSize: return "L";
    case SweepParameter::kComputeNeed: return "W";
    case SweepParameter::kDeadline: return "D";
    case SweepParameter::kUsers: return "K";
    case SweepParameter::kStations: return "M";
    case SweepParameter::kUsersPerStation: return "K_j";
  }
  return "none";
}

SweepParameter sweep_parameter_from_string(const std::string& name) {
  if (name == "none") return SweepParameter::kNone;
  if (name == "L") return SweepParameter::kDataSize;
  if (name == "W") return SweepParameter::kComputeNeed;
  if (name == "D") return SweepParameter::kDeadline;
  if (name == "K") return SweepParameter::kUsers;
  if (name == "M") return SweepParameter::kStations;
  if (name == "K_j") return SweepParameter::kUsersPerStation;
  throw std::invalid_argument("unknown sweep parameter: " + name);
}

ScenarioSpec scenario_for_value(const ScenarioSpec& base,
                                SweepParameter parameter, double value) {
  ScenarioSpec spec = base;
  switch (parameter) {
    case SweepParameter::kNone:
      break;
    case SweepParameter::kDataSize:
      spec.data_bits = {value, value};
      break;
    case SweepParameter::kComputeNeed:
      spec.cycles = {value / 3.0, 5.0 * value / 3.0};
      break;
    case SweepParameter::kDeadline:
      spec.deadline_s = value;
      break;
    case SweepParameter::kUsers:
      spec.users = static_cast<int>(value);
      break;
    case SweepParameter::kStations:
      spec.stations = static_cast<int>(value);
      break;
    case SweepParameter::kUsersPerStation:
      spec.users = static_cast<int>(value) * spec.stations;
      break;
  }
  return spec;
}

TrialResult run_trial(const Topology& topology, Algorithm algorithm,
                      const SolveOptions& opts,
                      const std::vector<std::vector<int>>& reuse_partition,
                      bool timing) {
  TrialResult row;
  row.algorithm = algorithm;
  const auto start = std::chrono::steady_clock::now();
  switch (algorithm) {
    case Algorithm::kJoint: {
      SolveResult r = solve_joint(topology, opts);
      row.energy_j = r.report.total_energy;
      row.iterations = r.report.iterations;
      row.signaling_msgs = r.report.signaling_msgs;
      row.residual_bw = r.report.residuals.bandwidth_rel;
      row.residual_comp = r.report.residuals.compute_rel_max;
      row.feasible = r.report.converged;
      break;
    }
    case Algorithm::kReuse: {
      ReuseResult r = allocate_with_reuse(topology, reuse_partition, opts);
      row.energy_j = r.report.total_energy;
      row.iterations = r.report.iterations;
      row.signaling_msgs = r.report.signaling_msgs;
      row.residual_bw = r.report.residuals.bandwidth_rel;
      row.residual_comp = r.report.residuals.compute_rel_max;
      row.feasible = r.report.converged;
      break;
    }
    default: {
      BaselineResult r;
      if (algorithm == Algorithm::kFixed)
        r = allocate_fixed(topology);
      else if (algorithm == Algorithm::kFixedBandwidth)
        r = allocate_fixed_bandwidth(topology, opts);
      else if (algorithm == Algorithm::kFixedBandwidthPerBs)
        r = allocate_fixed_bandwidth_per_bs(topology, opts);
      else
        r = allocate_fixed_computing(topology, opts);
      row.energy_j = r.total_energy;
      row.iterations = r.iterations;
      row.feasible = r.feasible;
      if (r.feasible)
        primal_residuals(topology, r.allocation, row.residual_bw,
                         row.residual_comp);
      break;
    }
  }
  if (timing) {
    const auto stop = std::chrono::steady_clock::now();
    row.wall_ms =
        std::chrono::duration<double, std::milli>(stop - start).count();
  }
  return row;
}

std::vector<TrialResult> run_sweep(const SweepSpec& sweep) {
  if (sweep.values.empty())
    throw std::invalid_argument("run_sweep: value list must be non-empty");
  if (!std::is_sorted(sweep.values.begin(), sweep.values.end()))
    throw std::invalid_argument("run_sweep: value list must be sorted");
  if (sweep.trials < 1)
    throw std::invalid_argument("run_sweep: trials must be >= 1");
  if (sweep.algorithms.empty())
    throw std::invalid_argument("run_sweep: no algorithms selected");
  for (Algorithm a : sweep.algorithms)
    if (a == Algorithm::kReuse && sweep.reuse_partition.empty())
      throw std::invalid_argument("run_sweep: reuse requires a partition");

  const int cells = static_cast<int>(sweep.values.size()) * sweep.trials;
  const int per_cell = static_cast<int>(sweep.algorithms.size());
  std::vector<TrialResult> rows(static_cast<size_t>(cells) * per_cell);

  parallel_for(cells, sweep.jobs, [&](int cell) {
    const int vi = cell / sweep.trials;
    const int trial = cell % sweep.trials;
    const double value = sweep.values[vi];
    const ScenarioSpec spec =
        scenario_for_value(sweep.base, sweep.parameter, value);

    for (int ai = 0; ai < per_cell; ++ai) {
      TrialResult& row = rows[static_cast<size_t>(cell) * per_cell + ai];
      row.sweep_param = to_string(sweep.parameter);
      row.sweep_value = value;
      row.trial = trial;
      row.algorithm = sweep.algorithms[ai];
      try {
        const Topology topo = generate(spec, static_cast<std::uint64_t>(trial));
        row = run_trial(topo, sweep.algorithms[ai], sweep.solve,
                        sweep.reuse_partition, sweep.timing);
        row.sweep_param = to_string(sweep.parameter);
        row.sweep_value = value;
        row.trial = trial;
      } catch (const std::exception&) {
        // Isolated: a failed draw or solve marks the row infeasible.
        row.feasible = false;
        row.energy_j = kInf;
      }
    }
  });

  std::sort(rows.begin(), rows.end(), [](const TrialResult& a,
                                         const TrialResult& b) {
    if (a.sweep_value != b.sweep_value) return a.sweep_value < b.sweep_value;
    if (a.trial != b.trial) return a.trial < b.trial;
    return static_cast<int>(a.algorithm) < static_cast<int>(b.algorithm);
  });
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<TrialResult>& results) {
  // A cell is one (sweep value, trial); drop it everywhere if any algorithm
  // in it failed.
  std::map<std::pair<double, int>, bool> cell_ok;
  for (const TrialResult& r : results) {
    auto key = std::make_pair(r.sweep_value, r.trial);
    auto it = cell_ok.find(key);
    const bool ok = r.feasible && std::isfinite(r.energy_j);
    cell_ok[key] = it == cell_ok.end() ? ok : (it->second && ok);
  }

  struct Acc {
    std::string param;
    std::vector<double> energies;
    double iter_sum = 0.0;
    double signaling_sum = 0.0;
    int excluded = 0;
  };
  std::map<std::pair<double, int>, Acc> acc;  // (value, algorithm id)
  for (const TrialResult& r : results) {
    auto key = std::make_pair(r.sweep_value, static_cast<int>(r.algorithm));
    Acc& a = acc[key];
    a.param = r.sweep_param;
    if (!cell_ok[{r.sweep_value, r.trial}]) {
      ++a.excluded;
      continue;
    }
    a.energies.push_back(r.energy_j);
    a.iter_sum += r.iterations;
    a.signaling_sum += static_cast<double>(r.signaling_msgs);
  }

  std::vector<SummaryRow> out;
  for (const auto& [key, a] : acc) {
    SummaryRow row;
    row.sweep_param = a.param;
    row.sweep_value = key.first;
    row.algorithm = static_cast<Algorithm>(key.second);
    row.trials_included = static_cast<int>(a.energies.size());
    row.trials_excluded = a.excluded;
    if (!a.energies.empty()) {
      double mean = 0.0;
      for (double e : a.energies) mean += e;
      mean /= static_cast<double>(a.energies.size());
      row.mean_energy_j = mean;
      if (a.energies.size() > 1) {
        double ss = 0.0;
        for (double e : a.energies) ss += (e - mean) * (e - mean);
        row.std_energy_j =
            std::sqrt(ss / static_cast<double>(a.energies.size() - 1));
      }
      row.mean_iterations = a.iter_sum / static_cast<double>(a.energies.size());
      row.mean_signaling_msgs =
          a.signaling_sum / static_cast<double>(a.energies.size());
    }
    out.push_back(row);
  }
  return out;
}

std::string results_csv(const std::vector<TrialResult>& results) {
  std::ostringstream out;
  out << "sweep_param,sweep_value,trial,algorithm,energy_J,iterations,"
         "signaling_msgs,feasible,residual_bw,residual_comp,wall_ms\n";
  for (const TrialResult& r : results) {
    out << r.sweep_param << ',' << format_double(r.sweep_value) << ','
        << r.trial << ',' << to_string(r.algorithm) << ','
        << format_double(r.energy_j) << ',' << r.iterations << ','
        << r.signaling_msgs << ',' << (r.feasible ? 1 : 0) << ','
        << format_double(r.residual_bw) << ','
        << format_double(r.residual_comp) << ','
        << format_double(r.wall_ms) << '\n';
  }
  return out.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "sweep_param,sweep_value,algorithm,trials_included,trials_excluded,"
         "mean_energy_J,std_energy_J,mean_iterations,mean_signaling_msgs\n";
  for (const SummaryRow& r : rows) {
    out << r.sweep_param << ',' << format_double(r.sweep_value) << ','
        << to_string(r.algorithm) << ',' << r.trials_included << ','
        << r.trials_excluded << ',' << format_double(r.mean_energy_j) << ','
        << format_double(r.std_energy_j) << ','
        << format_double(r.mean_iterations) << ','
        << format_double(r.mean_signaling_msgs) << '\n';
  }
  return out.str();
}

void emit(const std::vector<TrialResult>& results, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw std::runtime_error("emit: cannot create " + out_dir + ": " +
                             ec.message());
  auto write = [&](const std::string& name, const std::string& body) {
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("emit: cannot open " + path.string());
    file << body;
    if (!file) throw std::runtime_error("emit: write failed for " + path.string());
  };
  write("results.csv", results_csv(results));
  write("summary.csv", summary_csv(summarize(results)));
}

namespace {

FadingMode fading_from_string(const std::string& name) {
  if (name == "assoc") return FadingMode::kAtAssociation;
  if (name == "tx-only") return FadingMode::kTransmissionOnly;
  if (name == "off") return FadingMode::kOff;
  throw std::invalid_argument("unknown fading mode: " + name);
}

}  // namespace

SweepSpec load_sweep_config(const std::string& json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }

  SweepSpec sweep;
  if (root.contains("scenario")) {
    const auto& s = root["scenario"];
    ScenarioSpec& sc = sweep.base;
    sc.stations = s.value("stations", sc.stations);
    sc.users = s.value("users", sc.users);
    sc.radius_m = s.value("radius_m", sc.radius_m);
    sc.pathloss_intercept_db =
        s.value("pathloss_intercept_db", sc.pathloss_intercept_db);
    sc.pathloss_slope_db = s.value("pathloss_slope_db", sc.pathloss_slope_db);
    if (s.contains("fading"))
      sc.fading = fading_from_string(s["fading"].get<std::string>());
    sc.bandwidth_hz = s.value("bandwidth_hz", sc.bandwidth_hz);
    sc.noise_dbm_per_hz = s.value("noise_dbm_per_hz", sc.noise_dbm_per_hz);
    sc.capacity_cps = s.value("capacity_cps", sc.capacity_cps);
    if (s.contains("data_bits")) {
      sc.data_bits.low = s["data_bits"].value("low", sc.data_bits.low);
      sc.data_bits.high = s["data_bits"].value("high", sc.data_bits.high);
    }
    if (s.contains("cycles")) {
      sc.cycles.low = s["cycles"].value("low", sc.cycles.low);
      sc.cycles.high = s["cycles"].value("high", sc.cycles.high);
    }
    sc.deadline_s = s.value("deadline_s", sc.deadline_s);
    sc.seed = s.value("seed", sc.seed);
  }
  if (root.contains("sweep")) {
    const auto& s = root["sweep"];
    if (s.contains("parameter"))
      sweep.parameter =
          sweep_parameter_from_string(s["parameter"].get<std::string>());
    if (s.contains("values"))
      sweep.values = s["values"].get<std::vector<double>>();
    sweep.trials = s.value("trials", sweep.trials);
    if (s.contains("algorithms")) {
      sweep.algorithms.clear();
      for (const auto& name : s["algorithms"])
        sweep.algorithms.push_back(
            algorithm_from_string(name.get<std::string>()));
    }
    sweep.solve.epsilon = s.value("epsilon", sweep.solve.epsilon);
    if (s.contains("epsilon_mode")) {
      const std::string mode = s["epsilon_mode"].get<std::string>();
      if (mode == "abs")
        sweep.solve.epsilon_mode = EpsilonMode::kAbsolute;
      else if (mode == "rel")
        sweep.solve.epsilon_mode = EpsilonMode::kRelative;
      else
        throw std::invalid_argument("config: epsilon_mode must be abs or rel");
    }
    sweep.jobs = s.value("jobs", sweep.jobs);
    sweep.timing = s.value("timing", sweep.timing);
  }
  if (sweep.values.empty()) sweep.values = {0.0};
  if (root.contains("reuse_partition"))
    sweep.reuse_partition =
        root["reuse_partition"].get<std::vector<std::vector<int>>>();
  return sweep;
}

SweepSpec load_sweep_config_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file)
    throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << file.rdbuf();
  return load_sweep_config(buf.str());
}

}  // namespace mecsim
