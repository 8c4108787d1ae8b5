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

// Single-agent kernels: TD(0), EF-TD (optionally projected), mean-path
// EF-TD and the no-feedback ablation, plus the trajectory runner that
// records traces.

#ifndef EFSA_EF_TD_H_
#define EFSA_EF_TD_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <optional>

#include "efsa/common.h"
#include "efsa/compression.h"
#include "efsa/env_model.h"
#include "efsa/trace.h"

namespace efsa {

// theta_t, the memory e_{t-1}, and the last step's h_{t-1}, g_{t-1} and
// projection error e_{p,t}. e starts at zero.
struct AgentState {
  Vector theta;
  Vector e;
  Vector e_proj;
  Vector h;
  Vector g;
  std::int64_t t = 0;

  static AgentState Initial(const Vector& theta0);
};

// Euclidean ball of radius G centred at the origin.
struct ProjectionSpec {
  bool enabled = false;
  double G = 0.0;
};

// Pi_B(y); identity when projection is disabled.
Vector Project(const ProjectionSpec& proj, const Vector& y);

// G = max(1, 2 ||theta*|| + 1).
double DefaultProjectionRadius(const Vector& theta_star);

// Throws unless G >= ||theta*|| (so theta* lies in the ball).
void ValidateProjection(const ProjectionSpec& proj, const Vector& theta_star);

// Writes g(X, theta) into out.
using DirectionFn =
    std::function<void(const DataTuple& x, const Vector& theta, Vector& out)>;

// theta <- theta + alpha g.
void Td0Step(AgentState& state, const DataTuple& x, const FeatureMap& features,
             double gamma, double alpha);

// One step of error feedback around an arbitrary direction:
//   h = Q(e + g(theta)),  e <- e + g - h,  theta <- Pi(theta + alpha h).
void ErrorFeedbackStep(AgentState& state, const DataTuple& x,
                       const DirectionFn& direction, double alpha,
                       Compressor& q, const ProjectionSpec& proj);

void EfTdStep(AgentState& state, const DataTuple& x, const FeatureMap& features,
              double gamma, double alpha, Compressor& q,
              const ProjectionSpec& proj);

// EF-TD with the exact mean direction g_bar(theta) = Abar theta - bbar.
void MeanPathEfTdStep(AgentState& state, const SteadyState& ss, double alpha,
                      Compressor& q);

// theta <- theta + alpha Q(g); the memory stays zero.
void NoFeedbackStep(AgentState& state, const DataTuple& x,
                    const FeatureMap& features, double gamma, double alpha,
                    Compressor& q);

enum class Algorithm { kTd0, kEfTd, kEfTdNoFeedback, kEfSa, kMultiAgent };
enum class SamplerKind { kMeanPath, kIid, kMarkov };

const char* ToString(Algorithm a);
const char* ToString(SamplerKind s);

// Default step sizes taken from the convergence proofs:
// mean path (1-gamma)/(128 delta), i.i.d. (1-gamma)/(256 delta),
// Markov min((1-gamma)/112, cap).
double TheoremDefaultAlpha(SamplerKind sampler, double gamma, double delta,
                           std::optional<double> markov_cap = std::nullopt);

// Everything a trajectory needs besides the environment.
struct RunSpec {
  Algorithm algorithm = Algorithm::kEfTd;
  SamplerKind sampler = SamplerKind::kIid;
  CompressorSpec compressor;
  double alpha = 0.01;
  std::int64_t T = 1000;
  std::int64_t record_every = 1;
  ProjectionSpec projection;
  std::optional<Vector> theta0;  // zero when unset
  std::uint64_t seed = 0;        // trial seed
  int value_bits = 32;
  std::string config_hash;
};

// Called after every step with the state before and after it.
using StepHook =
    std::function<void(const AgentState& before, const AgentState& after)>;

Trace RunSingleAgent(const Environment& env, const SteadyState& ss,
                     const RunSpec& spec, const StepHook& hook = {});

// Shared driver used by RunSingleAgent and the nonlinear runner. The
// sampler is null for mean-path runs, whose direction ignores the tuple.
struct TrajectoryInputs {
  const SteadyState* ss = nullptr;  // D-norm; may be null
  Vector theta_star;
  DirectionFn direction;
  Sampler* sampler = nullptr;
};

Trace RunTrajectory(const TrajectoryInputs& in, const RunSpec& spec,
                    const StepHook& hook = {});

std::unique_ptr<Sampler> MakeSampler(SamplerKind kind,
                                     std::shared_ptr<const TransitionTable> table,
                                     const Vector& pi, std::uint64_t seed);

}  // namespace efsa

#endif  // EFSA_EF_TD_H_
