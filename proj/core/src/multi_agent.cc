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

#include "efsa/multi_agent.h"

#include <cmath>

#include "efsa/analysis.h"

namespace efsa {

Vector FleetState::MeanMemory() const {
  Vector acc = Vector::Zero(agents.front().e.size());
  for (const AgentState& a : agents) acc += a.e;
  return acc / static_cast<double>(M());
}

double FleetState::MemoryEnergy() const {
  double acc = 0.0;
  for (const AgentState& a : agents) acc += a.e.squaredNorm();
  return acc / static_cast<double>(M());
}

FleetState MakeFleet(const Environment& env, const SteadyState& ss, int M,
                     const CompressorSpec& spec, std::uint64_t seed) {
  if (M < 1) throw InvalidArgument("M must be at least 1");
  ValidateSpec(spec);
  if (spec.dim != env.K())
    throw InvalidArgument("compressor dimension does not match K");
  auto table = std::make_shared<const TransitionTable>(env.mrp);
  FleetState fleet;
  fleet.agents.reserve(M);
  fleet.samplers.reserve(M);
  fleet.compressors.reserve(M);
  for (int i = 0; i < M; ++i) {
    const auto index = static_cast<std::uint64_t>(i);
    fleet.agents.push_back(AgentState::Initial(Vector::Zero(env.K())));
    fleet.samplers.push_back(std::make_unique<IidSampler>(
        table, ss.pi, DeriveSeed(seed, Stream::kSampler, index)));
    fleet.compressors.emplace_back(spec,
                                   DeriveSeed(seed, Stream::kCompressor, index));
  }
  return fleet;
}

RoundRecord MultiAgentRound(ServerState& server, FleetState& fleet,
                            const FeatureMap& features, double gamma,
                            double alpha, int value_bits) {
  RoundRecord rec;
  rec.h_bar = Vector::Zero(server.theta.size());
  for (int i = 0; i < fleet.M(); ++i) {
    AgentState& a = fleet.agents[i];
    const DataTuple x = fleet.samplers[i]->Next();
    SampleTdDirection(x, features, gamma, server.theta, a.g);
    a.e += a.g;
    fleet.compressors[i].Compress(a.e, a.h);
    a.e -= a.h;
    ++a.t;
    rec.h_bar += a.h;
  }
  const double M = static_cast<double>(fleet.M());
  // (1/M) sum; for M = 1 this is h itself, bit for bit.
  if (fleet.M() > 1) rec.h_bar /= M;
  server.theta += alpha * rec.h_bar;
  ++server.t;
  rec.uplink_bits =
      fleet.M() * BitCost(fleet.compressors.front().spec(), value_bits);
  return rec;
}

WeightedIterateAverager::WeightedIterateAverager(const AveragingSpec& spec)
    : rho_(1.0 - spec.alpha * spec.A) {
  if (!(spec.alpha * spec.A < 1.0) || spec.alpha * spec.A < 0.0)
    throw InvalidArgument("averaging requires 0 <= alpha A < 1");
}

void WeightedIterateAverager::Add(const Vector& theta) {
  u_ = 1.0 + rho_ * u_;
  if (count_ == 0) mean_ = theta;
  else mean_ += (theta - mean_) / u_;
  ++count_;
}

Vector WeightedAverageIterate(std::span<const Vector> thetas,
                              const AveragingSpec& spec) {
  if (thetas.empty()) throw InvalidArgument("nothing to average");
  WeightedIterateAverager avg(spec);
  for (const Vector& th : thetas) avg.Add(th);
  return avg.value();
}

Trace RunMultiAgent(const Environment& env, const SteadyState& ss,
                    const MultiAgentSpec& spec, const RoundHook& hook) {
  const RunSpec& run = spec.run;
  const int K = env.K();
  if (run.sampler != SamplerKind::kIid)
    throw InvalidArgument("multi-agent runs use the i.i.d. sampler");
  if (run.projection.enabled)
    throw InvalidArgument("multi-agent runs do not support projection");
  if (!(run.alpha > 0.0 && run.alpha < 1.0))
    throw InvalidArgument("step size alpha must lie in (0, 1)");
  if (run.T < 0 || run.record_every < 1)
    throw InvalidArgument("T must be >= 0 and record_every >= 1");
  if (run.theta0 && run.theta0->size() != K)
    throw InvalidArgument("theta0 has the wrong dimension");

  FleetState fleet = MakeFleet(env, ss, spec.M, run.compressor, run.seed);
  ServerState server{run.theta0.value_or(Vector::Zero(K)), 0};
  std::optional<WeightedIterateAverager> avg;
  if (spec.averaging) {
    avg.emplace(AveragingSpec{
        run.alpha, spec.A_override.value_or(DefaultAveragingA(ss.omega, env.gamma()))});
    avg->Add(server.theta);
  }

  Trace trace;
  trace.multi_agent = true;
  trace.meta.config_hash = run.config_hash;
  trace.meta.seed = run.seed;
  trace.meta.alpha = run.alpha;
  if (auto d = Delta(run.compressor)) trace.meta.delta = *d;

  const std::int64_t per_agent_bits = BitCost(run.compressor, run.value_bits);
  std::int64_t uplink = 0;
  Vector h_bar = Vector::Zero(K);
  auto record = [&](double E) {
    TraceRecord r;
    r.t = server.t;
    r.E = E;
    r.dnorm = DNormSq(ss, server.theta, ss.theta_star);
    const Vector e_bar = fleet.MeanMemory();
    r.psi = LyapunovPsi(server.theta, e_bar, run.alpha, ss.theta_star);
    r.e_norm = e_bar.norm();
    r.h_norm = h_bar.norm();
    r.eproj_norm = 0.0;
    r.bits = server.t * per_agent_bits;
    r.M = spec.M;
    r.ebar = fleet.MemoryEnergy();
    r.uplink_bits_cum = uplink;
    if (avg) r.dnorm_avg_iterate = DNormSq(ss, avg->value(), ss.theta_star);
    trace.records.push_back(r);
  };
  record((server.theta - ss.theta_star).squaredNorm());

  for (std::int64_t step = 1; step <= run.T; ++step) {
    RoundRecord rr = MultiAgentRound(server, fleet, env.features, env.gamma(),
                                     run.alpha, run.value_bits);
    h_bar = std::move(rr.h_bar);
    uplink += rr.uplink_bits;
    if (avg) avg->Add(server.theta);
    if (hook) hook(server, fleet);
    const double E = (server.theta - ss.theta_star).squaredNorm();
    if (!std::isfinite(E) || E > kDivergenceThreshold) {
      trace.diverged = true;
      record(E);
      break;
    }
    if (step % run.record_every == 0 || step == run.T) record(E);
  }
  return trace;
}

double EmpiricalAveragedDirectionVariance(const Environment& env,
                                          const SteadyState& ss, int M,
                                          std::int64_t rounds,
                                          std::uint64_t seed) {
  if (M < 1 || rounds < 1) throw InvalidArgument("need M >= 1 and rounds >= 1");
  auto table = std::make_shared<const TransitionTable>(env.mrp);
  std::vector<IidSampler> samplers;
  samplers.reserve(M);
  for (int i = 0; i < M; ++i)
    samplers.emplace_back(table, ss.pi,
                          DeriveSeed(seed, Stream::kSampler,
                                     static_cast<std::uint64_t>(i)));
  const int K = env.K();
  Vector g(K), acc(K);
  double total = 0.0;
  for (std::int64_t r = 0; r < rounds; ++r) {
    acc.setZero();
    for (int i = 0; i < M; ++i) {
      SampleTdDirection(samplers[i].Next(), env.features, env.gamma(),
                        ss.theta_star, g);
      acc += g;
    }
    acc /= static_cast<double>(M);
    total += acc.squaredNorm();
  }
  return total / static_cast<double>(rounds);
}

}  // namespace efsa
