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

#ifndef MECSIM_TESTS_TEST_UTIL_HPP
#define MECSIM_TESTS_TEST_UTIL_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "mecsim/model.hpp"
#include "mecsim/scenario.hpp"

namespace mecsim::testutil {

constexpr double kNoise = 3.9810717055349694e-21;  // -174 dBm/Hz

struct UserParams {
  double gain = 1e-10;
  double data_bits = 5e5;
  double cycles = 1.5e9;
  double deadline_s = 0.5;
  int station = 0;
};

/// Handcrafted topology with explicit gains (no geometry involved).
inline Topology make_topology(const std::vector<UserParams>& users,
                              int stations, double capacity = 1e11,
                              double bandwidth = 1e7, double noise = kNoise) {
  Topology topo;
  topo.bandwidth_hz = bandwidth;
  topo.noise_w_per_hz = noise;
  topo.stations.resize(stations);
  for (int j = 0; j < stations; ++j) {
    topo.stations[j].id = j;
    topo.stations[j].capacity = capacity;
  }
  for (size_t i = 0; i < users.size(); ++i) {
    UserRecord u;
    u.id = static_cast<int>(i);
    u.gain = users[i].gain;
    u.station = users[i].station;
    u.task.data_bits = users[i].data_bits;
    u.task.cycles = users[i].cycles;
    u.task.deadline_s = users[i].deadline_s;
    topo.users.push_back(u);
    topo.stations[u.station].users.push_back(u.id);
  }
  return topo;
}

/// Golden-section minimizer for smooth unimodal scalar functions. Interval
/// shrinks by the golden ratio per probe; ~200 probes reach double-precision
/// plateaus for well-scaled inputs.
inline double golden_section_min(const std::function<double(double)>& f,
                                 double lo, double hi, int iterations = 220) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace mecsim::testutil

#endif  // MECSIM_TESTS_TEST_UTIL_HPP
