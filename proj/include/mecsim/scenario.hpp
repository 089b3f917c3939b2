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

#ifndef MECSIM_SCENARIO_HPP
#define MECSIM_SCENARIO_HPP

#include <cstdint>
#include <string>

#include "mecsim/model.hpp"

namespace mecsim {

enum class FadingMode {
  kAtAssociation,     // faded gains drive both association and transmission
  kTransmissionOnly,  // association on pathloss; transmission sees fading
  kOff,
};

struct Range {
  double low = 0.0;
  double high = 0.0;
};

struct ScenarioSpec {
  int stations = 4;
  int users = 32;
  double radius_m = 200.0;
  double pathloss_intercept_db = 30.6;
  double pathloss_slope_db = 36.7;  // per decade of distance
  FadingMode fading = FadingMode::kAtAssociation;
  double bandwidth_hz = 1e7;
  double noise_dbm_per_hz = -174.0;
  double capacity_cps = 1e11;            // per station
  Range data_bits{5e5, 5e5};             // L draw
  Range cycles{5e8, 2.5e9};              // W draw
  double deadline_s = 0.5;               // D, common to all users
  std::uint64_t seed = 1;
  int max_regen_attempts = 100;  // re-draws allowed on an infeasible topology
};

/// xoshiro256++ seeded through splitmix64. Self-contained so that draws are
/// identical across platforms and standard-library versions.
class Rng {
 public:
  /// Independent stream for (seed, stream): trials draw from their own
  /// streams so results do not depend on execution order.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  double uniform01();  // [0, 1)
  double uniform(double low, double high);
  double exponential();  // unit mean

 private:
  std::uint64_t state_[4] = {};
};

/// Distance-power-law attenuation in linear scale, distance clamped below
/// at 1 m to avoid near-field gains above unity.
double pathloss_gain(double distance_m, double intercept_db = 30.6,
                     double slope_db = 36.7);

/// Per-pair quantities of the final accepted draw, for diagnostics and
/// tests (association optimality is not observable from the topology
/// alone).
struct GenerationTrace {
  // [user][station]: the metric association maximized and the gain the
  // transmission would see.
  std::vector<std::vector<double>> association_metric;
  std::vector<std::vector<double>> tx_gain;
  int attempts = 0;
};

/// Draws one topology: stations and users uniform in the disk, per-pair
/// unit-mean exponential fading power, association to the strongest
/// received gain, task parameters from the configured ranges. Deterministic
/// in (spec, trial). An infeasible draw is retried with a fresh sub-stream
/// up to spec.max_regen_attempts, after which std::runtime_error is thrown.
Topology generate(const ScenarioSpec& spec, std::uint64_t trial = 0,
                  GenerationTrace* trace = nullptr);

/// Line-oriented fixture format: band/noise header, stations, then one user
/// per line (id, station, gain, data bits, cycles, deadline). Lossless for
/// doubles.
std::string topology_to_text(const Topology& topology);
Topology topology_from_text(const std::string& text);

}  // namespace mecsim

#endif  // MECSIM_SCENARIO_HPP
