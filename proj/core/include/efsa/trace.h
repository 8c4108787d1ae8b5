// Copyright 2026 The efsa Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef EFSA_TRACE_H_
#define EFSA_TRACE_H_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace efsa {

// One recorded point of a run. Multi-agent fields stay at their defaults
// for single-agent traces.
struct TraceRecord {
  std::int64_t t = 0;
  double E = 0.0;           // ||theta_t - theta*||^2
  double dnorm = 0.0;       // ||V_theta_t - V_theta*||_D^2
  double psi = 0.0;         // single-agent Lyapunov function
  double e_norm = 0.0;      // ||e_{t-1}|| (fleet: ||e_bar||)
  double h_norm = 0.0;      // ||h_{t-1}|| (fleet: ||h_bar||)
  double eproj_norm = 0.0;  // ||e_{p,t}||
  std::int64_t bits = 0;    // cumulative bits sent up to t

  int M = 0;
  double ebar = 0.0;  // (1/M) sum_i ||e_{i,t-1}||^2
  std::int64_t uplink_bits_cum = 0;
  double dnorm_avg_iterate = std::numeric_limits<double>::quiet_NaN();
};

struct TraceMetadata {
  std::string config_hash;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double delta = std::numeric_limits<double>::quiet_NaN();
};

struct Trace {
  TraceMetadata meta;
  std::vector<TraceRecord> records;
  bool diverged = false;
  bool multi_agent = false;
};

// E_t above this marks a run as diverged and stops it.
inline constexpr double kDivergenceThreshold = 1e12;

}  // namespace efsa

#endif  // EFSA_TRACE_H_
