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

#include "efsa/ef_td.h"

#include <algorithm>
#include <cmath>

#include "efsa/analysis.h"

namespace efsa {
namespace {

void Advance(AgentState& state, double alpha, const Vector& direction,
             const ProjectionSpec& proj) {
  if (!proj.enabled) {
    state.theta += alpha * direction;
    return;
  }
  Vector y = state.theta + alpha * direction;
  state.theta = Project(proj, y);
  state.e_proj = state.theta - y;
}

void Td0StepWith(AgentState& state, const DataTuple& x,
                 const DirectionFn& direction, double alpha,
                 const ProjectionSpec& proj) {
  direction(x, state.theta, state.g);
  state.h = state.g;
  Advance(state, alpha, state.g, proj);
  ++state.t;
}

void NoFeedbackStepWith(AgentState& state, const DataTuple& x,
                        const DirectionFn& direction, double alpha,
                        Compressor& q, const ProjectionSpec& proj) {
  direction(x, state.theta, state.g);
  q.Compress(state.g, state.h);
  Advance(state, alpha, state.h, proj);
  ++state.t;
}

DirectionFn TdDirection(const FeatureMap& features, double gamma) {
  return [&features, gamma](const DataTuple& x, const Vector& theta,
                            Vector& out) {
    SampleTdDirection(x, features, gamma, theta, out);
  };
}

}  // namespace

AgentState AgentState::Initial(const Vector& theta0) {
  const auto K = theta0.size();
  AgentState s;
  s.theta = theta0;
  s.e = Vector::Zero(K);
  s.e_proj = Vector::Zero(K);
  s.h = Vector::Zero(K);
  s.g = Vector::Zero(K);
  return s;
}

Vector Project(const ProjectionSpec& proj, const Vector& y) {
  if (!proj.enabled) return y;
  const double norm = y.norm();
  if (norm <= proj.G) return y;
  return y * (proj.G / norm);
}

double DefaultProjectionRadius(const Vector& theta_star) {
  return std::max(1.0, 2.0 * theta_star.norm() + 1.0);
}

void ValidateProjection(const ProjectionSpec& proj, const Vector& theta_star) {
  if (!proj.enabled) return;
  if (!(proj.G > 0.0)) throw InvalidArgument("projection radius must be positive");
  if (theta_star.norm() > proj.G)
    throw InvalidArgument("projection ball of radius " + std::to_string(proj.G) +
                          " does not contain theta*");
}

void Td0Step(AgentState& state, const DataTuple& x, const FeatureMap& features,
             double gamma, double alpha) {
  Td0StepWith(state, x, TdDirection(features, gamma), alpha, ProjectionSpec{});
}

void ErrorFeedbackStep(AgentState& state, const DataTuple& x,
                       const DirectionFn& direction, double alpha,
                       Compressor& q, const ProjectionSpec& proj) {
  direction(x, state.theta, state.g);
  state.e += state.g;           // e_{t-1} + g_t(theta_t)
  q.Compress(state.e, state.h);  // h_t
  state.e -= state.h;           // e_t
  Advance(state, alpha, state.h, proj);
  ++state.t;
}

void EfTdStep(AgentState& state, const DataTuple& x, const FeatureMap& features,
              double gamma, double alpha, Compressor& q,
              const ProjectionSpec& proj) {
  ErrorFeedbackStep(state, x, TdDirection(features, gamma), alpha, q, proj);
}

void MeanPathEfTdStep(AgentState& state, const SteadyState& ss, double alpha,
                      Compressor& q) {
  DirectionFn mean = [&ss](const DataTuple&, const Vector& theta, Vector& out) {
    out.noalias() = ss.Abar * theta;
    out -= ss.bbar;
  };
  ErrorFeedbackStep(state, DataTuple{}, mean, alpha, q, ProjectionSpec{});
}

void NoFeedbackStep(AgentState& state, const DataTuple& x,
                    const FeatureMap& features, double gamma, double alpha,
                    Compressor& q) {
  NoFeedbackStepWith(state, x, TdDirection(features, gamma), alpha, q,
                     ProjectionSpec{});
}

const char* ToString(Algorithm a) {
  switch (a) {
    case Algorithm::kTd0: return "td0";
    case Algorithm::kEfTd: return "ef_td";
    case Algorithm::kEfTdNoFeedback: return "ef_td_nofb";
    case Algorithm::kEfSa: return "ef_sa";
    case Algorithm::kMultiAgent: return "multi_agent";
  }
  return "?";
}

const char* ToString(SamplerKind s) {
  switch (s) {
    case SamplerKind::kMeanPath: return "mean_path";
    case SamplerKind::kIid: return "iid";
    case SamplerKind::kMarkov: return "markov";
  }
  return "?";
}

double TheoremDefaultAlpha(SamplerKind sampler, double gamma, double delta,
                           std::optional<double> markov_cap) {
  switch (sampler) {
    case SamplerKind::kMeanPath: return (1.0 - gamma) / (128.0 * delta);
    case SamplerKind::kIid: return (1.0 - gamma) / (256.0 * delta);
    case SamplerKind::kMarkov: {
      const double a = (1.0 - gamma) / 112.0;
      return markov_cap ? std::min(a, *markov_cap) : a;
    }
  }
  return 0.0;
}

std::unique_ptr<Sampler> MakeSampler(SamplerKind kind,
                                     std::shared_ptr<const TransitionTable> table,
                                     const Vector& pi, std::uint64_t seed) {
  switch (kind) {
    case SamplerKind::kMeanPath: return nullptr;
    case SamplerKind::kIid:
      return std::make_unique<IidSampler>(std::move(table), pi, seed);
    case SamplerKind::kMarkov:
      return std::make_unique<MarkovSampler>(std::move(table), seed);
  }
  return nullptr;
}

Trace RunTrajectory(const TrajectoryInputs& in, const RunSpec& spec,
                    const StepHook& hook) {
  const auto K = in.theta_star.size();
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
    throw InvalidArgument("step size alpha must lie in (0, 1)");
  if (spec.T < 0 || spec.record_every < 1)
    throw InvalidArgument("T must be >= 0 and record_every >= 1");
  if (spec.theta0 && spec.theta0->size() != K)
    throw InvalidArgument("theta0 has the wrong dimension");
  ValidateProjection(spec.projection, in.theta_star);

  const Vector theta0 = spec.theta0.value_or(Vector::Zero(K));
  if (spec.projection.enabled && theta0.norm() > spec.projection.G)
    throw InvalidArgument("theta0 lies outside the projection ball");

  AgentState state = AgentState::Initial(theta0);
  Compressor q(spec.compressor, DeriveSeed(spec.seed, Stream::kCompressor, 0));

  Trace trace;
  trace.meta.config_hash = spec.config_hash;
  trace.meta.seed = spec.seed;
  trace.meta.alpha = spec.alpha;
  if (spec.algorithm == Algorithm::kTd0) {
    trace.meta.delta = 1.0;
  } else if (auto d = Delta(spec.compressor)) {
    trace.meta.delta = *d;
  }
  const std::int64_t bits_per_step =
      spec.algorithm == Algorithm::kTd0
          ? BitCost(CompressorSpec::Identity(static_cast<int>(K)), spec.value_bits)
          : BitCost(spec.compressor, spec.value_bits);

  std::int64_t bits = 0;
  auto record = [&](double E) {
    TraceRecord r;
    r.t = state.t;
    r.E = E;
    r.dnorm = in.ss ? DNormSq(*in.ss, state.theta, in.theta_star)
                    : std::numeric_limits<double>::quiet_NaN();
    r.psi = LyapunovPsi(state.theta, state.e, spec.alpha, in.theta_star);
    r.e_norm = state.e.norm();
    r.h_norm = state.h.norm();
    r.eproj_norm = state.e_proj.norm();
    r.bits = bits;
    trace.records.push_back(r);
  };
  record((state.theta - in.theta_star).squaredNorm());

  std::optional<AgentState> before;
  for (std::int64_t step = 1; step <= spec.T; ++step) {
    const DataTuple x = in.sampler ? in.sampler->Next() : DataTuple{};
    if (hook) before = state;
    switch (spec.algorithm) {
      case Algorithm::kTd0:
        Td0StepWith(state, x, in.direction, spec.alpha, spec.projection);
        break;
      case Algorithm::kEfTd:
      case Algorithm::kEfSa:
        ErrorFeedbackStep(state, x, in.direction, spec.alpha, q, spec.projection);
        break;
      case Algorithm::kEfTdNoFeedback:
        NoFeedbackStepWith(state, x, in.direction, spec.alpha, q,
                           spec.projection);
        break;
      case Algorithm::kMultiAgent:
        throw InvalidArgument("multi_agent runs go through RunMultiAgent");
    }
    bits += bits_per_step;
    if (hook) hook(*before, state);

    const double E = (state.theta - in.theta_star).squaredNorm();
    if (!std::isfinite(E) || E > kDivergenceThreshold) {
      trace.diverged = true;
      record(E);
      break;
    }
    if (step % spec.record_every == 0 || step == spec.T) record(E);
  }
  return trace;
}

Trace RunSingleAgent(const Environment& env, const SteadyState& ss,
                     const RunSpec& spec, const StepHook& hook) {
  if (spec.algorithm == Algorithm::kEfSa || spec.algorithm == Algorithm::kMultiAgent)
    throw InvalidArgument(std::string("RunSingleAgent does not run ") +
                          ToString(spec.algorithm));
  if (spec.compressor.dim != env.K())
    throw InvalidArgument("compressor dimension does not match K");

  TrajectoryInputs in;
  in.ss = &ss;
  in.theta_star = ss.theta_star;
  auto table = std::make_shared<const TransitionTable>(env.mrp);
  std::unique_ptr<Sampler> sampler = MakeSampler(
      spec.sampler, table, ss.pi, DeriveSeed(spec.seed, Stream::kSampler, 0));
  in.sampler = sampler.get();
  if (spec.sampler == SamplerKind::kMeanPath) {
    in.direction = [&ss](const DataTuple&, const Vector& theta, Vector& out) {
      out.noalias() = ss.Abar * theta;
      out -= ss.bbar;
    };
  } else {
    in.direction = TdDirection(env.features, env.gamma());
  }
  return RunTrajectory(in, spec, hook);
}

}  // namespace efsa
