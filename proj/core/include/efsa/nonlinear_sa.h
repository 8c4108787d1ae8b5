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

// Error feedback around general update maps g(X, theta), with sampling
// checkers for the Lipschitz and strong-monotonicity assumptions.

#ifndef EFSA_NONLINEAR_SA_H_
#define EFSA_NONLINEAR_SA_H_

#include <cstdint>
#include <functional>
#include <string>

#include "efsa/common.h"
#include "efsa/ef_td.h"
#include "efsa/env_model.h"

namespace efsa {

struct UpdateMap {
  std::string name;
  DirectionFn eval;
  // Exact expectation of eval under the stationary tuple distribution.
  std::function<Vector(const Vector&)> mean_eval;
  double L = 0.0;     // claimed Lipschitz constant
  double beta = 0.0;  // claimed strong-monotonicity constant
  Vector theta_star;  // claimed root of mean_eval
  int K = 0;
};

// The TD(0) direction seen as an update map; L = 2, beta = omega (1 - gamma).
// The environment and steady state must outlive the map.
UpdateMap TdUpdateMap(const Environment& env, const SteadyState& ss);

// g(X, theta) = -(theta - b(s)) - 0.5 tanh(theta - b(s)) with per-state
// offsets b(s) ~ N(0, I). L = 1.5, beta = 1; theta* is the exact root of
// the stationary mean map.
UpdateMap SyntheticUpdateMap(const Environment& env, const SteadyState& ss,
                             std::uint64_t seed);

// Exact mean of a map by enumeration over (s, s').
Vector EnumeratedMean(const UpdateMap& map, const Environment& env,
                      const SteadyState& ss, const Vector& theta);

// One step of Algorithm 1 around map.eval.
void EfSaStep(AgentState& state, const DataTuple& x, const UpdateMap& map,
              double alpha, Compressor& q, const ProjectionSpec& proj);

// Trajectory of EF-SA; spec.algorithm must be ef_sa (or td0 / ef_td_nofb
// for ablations around the same map). Requires alpha * beta < 1.
Trace RunEfSa(const Environment& env, const SteadyState& ss,
              const UpdateMap& map, const RunSpec& spec,
              const StepHook& hook = {});

struct LipschitzReport {
  double max_ratio = 0.0;
  bool pass = false;
};

struct MonotoneReport {
  double min_beta_observed = 0.0;
  bool pass = false;
};

LipschitzReport CheckLipschitz(const UpdateMap& map, const Environment& env,
                               int trials, std::uint64_t seed);

// Samples theta and measures -<theta - theta*, mean(theta) - mean(theta*)>
// / ||theta - theta*||^2.
MonotoneReport CheckMonotone(const UpdateMap& map, int trials,
                             std::uint64_t seed);

}  // namespace efsa

#endif  // EFSA_NONLINEAR_SA_H_
