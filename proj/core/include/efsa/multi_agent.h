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

// Parameter-server simulation of multi-agent EF-TD: M agents with private
// i.i.d. samplers and memories, a server averaging compressed directions,
// weighted iterate averaging and uplink accounting.

#ifndef EFSA_MULTI_AGENT_H_
#define EFSA_MULTI_AGENT_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "efsa/common.h"
#include "efsa/compression.h"
#include "efsa/ef_td.h"
#include "efsa/env_model.h"
#include "efsa/trace.h"

namespace efsa {

struct ServerState {
  Vector theta;
  std::int64_t t = 0;
};

// Per-agent memories plus the private sample and compressor streams.
struct FleetState {
  std::vector<AgentState> agents;  // theta unused; e, h, g per agent
  std::vector<std::unique_ptr<Sampler>> samplers;
  std::vector<Compressor> compressors;

  int M() const { return static_cast<int>(agents.size()); }
  Vector MeanMemory() const;
  double MemoryEnergy() const;  // (1/M) sum ||e_i||^2
};

// Agent i draws from an i.i.d. sampler seeded DeriveSeed(seed, kSampler, i)
// and compresses with DeriveSeed(seed, kCompressor, i). Agent 0 therefore
// shares its streams with a single-agent run of the same seed.
FleetState MakeFleet(const Environment& env, const SteadyState& ss, int M,
                     const CompressorSpec& spec, std::uint64_t seed);

struct RoundRecord {
  Vector h_bar;
  std::int64_t uplink_bits = 0;
};

// One synchronous round: every agent forms h_i = Q(e_i + g_i(theta)),
// updates e_i, and the server applies theta += alpha (1/M) sum_i h_i with
// the sum taken in ascending agent order.
RoundRecord MultiAgentRound(ServerState& server, FleetState& fleet,
                            const FeatureMap& features, double gamma,
                            double alpha, int value_bits = 32);

// Weights w_t = (1 - alpha A)^{-(t+1)}; A defaults to omega (1-gamma)/8.
struct AveragingSpec {
  double alpha = 0.0;
  double A = 0.0;
};

inline double DefaultAveragingA(double omega, double gamma) {
  return omega * (1.0 - gamma) / 8.0;
}

// Streaming sum_t wbar_t theta_t. Keeps u_t = W_t / w_t = 1 + rho u_{t-1}
// (rho = 1 - alpha A) so raw weights are never formed.
class WeightedIterateAverager {
 public:
  explicit WeightedIterateAverager(const AveragingSpec& spec);
  void Add(const Vector& theta);
  const Vector& value() const { return mean_; }
  std::int64_t count() const { return count_; }

 private:
  double rho_;
  double u_ = 0.0;
  std::int64_t count_ = 0;
  Vector mean_;
};

Vector WeightedAverageIterate(std::span<const Vector> thetas,
                              const AveragingSpec& spec);

struct MultiAgentSpec {
  RunSpec run;  // algorithm multi_agent, sampler iid
  int M = 1;
  bool averaging = true;
  std::optional<double> A_override;
};

using RoundHook = std::function<void(const ServerState&, const FleetState&)>;

Trace RunMultiAgent(const Environment& env, const SteadyState& ss,
                    const MultiAgentSpec& spec, const RoundHook& hook = {});

// Mean over rounds of ||(1/M) sum_i g_i(theta*)||^2 with fresh i.i.d.
// tuples; its expectation is sigma^2 / M.
double EmpiricalAveragedDirectionVariance(const Environment& env,
                                          const SteadyState& ss, int M,
                                          std::int64_t rounds,
                                          std::uint64_t seed);

}  // namespace efsa

#endif  // EFSA_MULTI_AGENT_H_
