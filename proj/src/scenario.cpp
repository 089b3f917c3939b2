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

#include "mecsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mecsim {

namespace {

constexpr double kTau = 6.283185307179586;

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream_id) {
  Rng rng;
  std::uint64_t s = seed;
  s ^= 0x6a09e667f3bcc909ull + splitmix64(stream_id);
  for (auto& word : rng.state_) word = splitmix64(s);
  return rng;
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double low, double high) {
  return low + (high - low) * uniform01();
}

double Rng::exponential() {
  // 1 - u in (0, 1] keeps the log finite.
  return -std::log(1.0 - uniform01());
}

double pathloss_gain(double distance_m, double intercept_db, double slope_db) {
  const double d = std::max(distance_m, 1.0);
  const double loss_db = intercept_db + slope_db * std::log10(d);
  return std::pow(10.0, -loss_db / 10.0);
}

namespace {

struct Xy {
  double x = 0.0, y = 0.0;
};

Xy disk_point(Rng& rng, double radius) {
  // sqrt law keeps the area density uniform.
  const double r = radius * std::sqrt(rng.uniform01());
  const double phi = kTau * rng.uniform01();
  return {r * std::cos(phi), r * std::sin(phi)};
}

Topology draw_once(const ScenarioSpec& spec, Rng& rng,
                   GenerationTrace* trace) {
  const int m = spec.stations;
  const int k = spec.users;
  if (trace) {
    trace->association_metric.assign(k, std::vector<double>(m, 0.0));
    trace->tx_gain.assign(k, std::vector<double>(m, 0.0));
  }

  std::vector<Xy> bs(m), ue(k);
  for (auto& p : bs) p = disk_point(rng, spec.radius_m);
  for (auto& p : ue) p = disk_point(rng, spec.radius_m);

  // Per user-station pair, drawn before association so that association can
  // see the faded gains.
  std::vector<double> fading;
  if (spec.fading != FadingMode::kOff) {
    fading.resize(static_cast<size_t>(k) * m);
    for (auto& f : fading) f = rng.exponential();
  }

  Topology topo;
  topo.bandwidth_hz = spec.bandwidth_hz;
  topo.noise_w_per_hz = dbm_per_hz_to_w_per_hz(spec.noise_dbm_per_hz);
  topo.stations.resize(m);
  for (int j = 0; j < m; ++j) {
    topo.stations[j].id = j;
    topo.stations[j].capacity = spec.capacity_cps;
  }

  topo.users.resize(k);
  for (int i = 0; i < k; ++i) {
    UserRecord& u = topo.users[i];
    u.id = i;
    u.task.data_bits = rng.uniform(spec.data_bits.low, spec.data_bits.high);
    u.task.cycles = rng.uniform(spec.cycles.low, spec.cycles.high);
    u.task.deadline_s = spec.deadline_s;

    int best = 0;
    double best_metric = -1.0, best_gain = -1.0;
    for (int j = 0; j < m; ++j) {
      const double dx = ue[i].x - bs[j].x, dy = ue[i].y - bs[j].y;
      const double pl =
          pathloss_gain(std::hypot(dx, dy), spec.pathloss_intercept_db,
                        spec.pathloss_slope_db);
      const double f = spec.fading == FadingMode::kOff
                           ? 1.0
                           : fading[static_cast<size_t>(i) * m + j];
      const double gain = pl * f;
      const double metric =
          spec.fading == FadingMode::kAtAssociation ? gain : pl;
      if (trace) {
        trace->association_metric[i][j] = metric;
        trace->tx_gain[i][j] = gain;
      }
      if (metric > best_metric) {
        best_metric = metric;
        best = j;
        best_gain = gain;
      }
    }
    u.station = best;
    u.gain = best_gain;
    topo.stations[best].users.push_back(i);
  }
  return topo;
}

}  // namespace

Topology generate(const ScenarioSpec& spec, std::uint64_t trial,
                  GenerationTrace* trace) {
  if (spec.stations < 1 || spec.users < 1)
    throw std::invalid_argument("generate: counts must be >= 1");
  if (!(spec.radius_m > 0.0))
    throw std::invalid_argument("generate: radius must be > 0");
  if (spec.data_bits.low > spec.data_bits.high ||
      spec.cycles.low > spec.cycles.high)
    throw std::invalid_argument("generate: distribution bounds out of order");

  for (int attempt = 0; attempt <= spec.max_regen_attempts; ++attempt) {
    // One sub-stream per (trial, attempt) so retries stay reproducible.
    std::uint64_t tag = trial;
    std::uint64_t salt = splitmix64(tag) + static_cast<std::uint64_t>(attempt);
    Rng rng = Rng::stream(spec.seed, salt);
    Topology topo = draw_once(spec, rng, trace);
    if (trace) trace->attempts = attempt + 1;
    if (all_feasible(check_feasibility(topo))) return topo;
  }
  throw std::runtime_error(
      "generate: no feasible topology within the retry budget");
}

std::string topology_to_text(const Topology& topo) {
  std::ostringstream out;
  out << "topology v1\n";
  out << "band " << format_double(topo.bandwidth_hz) << " noise "
      << format_double(topo.noise_w_per_hz) << "\n";
  out << "stations " << topo.stations.size() << "\n";
  for (const StationRecord& st : topo.stations)
    out << st.id << " " << format_double(st.capacity) << "\n";
  out << "users " << topo.users.size() << "\n";
  for (const UserRecord& u : topo.users)
    out << u.id << " " << u.station << " " << format_double(u.gain) << " "
        << format_double(u.task.data_bits) << " "
        << format_double(u.task.cycles) << " "
        << format_double(u.task.deadline_s) << "\n";
  return out.str();
}

Topology topology_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string word, version;
  in >> word >> version;
  if (word != "topology" || version != "v1")
    throw std::invalid_argument("topology_from_text: bad header");

  Topology topo;
  size_t n_stations = 0, n_users = 0;
  in >> word >> topo.bandwidth_hz >> word >> topo.noise_w_per_hz;
  in >> word >> n_stations;
  topo.stations.resize(n_stations);
  for (auto& st : topo.stations) in >> st.id >> st.capacity;
  in >> word >> n_users;
  topo.users.resize(n_users);
  for (auto& u : topo.users) {
    in >> u.id >> u.station >> u.gain >> u.task.data_bits >> u.task.cycles >>
        u.task.deadline_s;
    if (u.station < 0 || u.station >= static_cast<int>(n_stations))
      throw std::invalid_argument("topology_from_text: bad station index");
    topo.stations[u.station].users.push_back(u.id);
  }
  if (!in)
    throw std::invalid_argument("topology_from_text: truncated input");
  validate_topology(topo);
  return topo;
}

}  // namespace mecsim
