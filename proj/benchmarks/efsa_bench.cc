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

#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "efsa/compression.h"
#include "efsa/ef_td.h"
#include "efsa/env_model.h"
#include "efsa/multi_agent.h"

namespace {

efsa::Environment Env(int n, int K) {
  efsa::EnvironmentParams p;
  p.n = n;
  p.K = K;
  p.seed = 1;
  return efsa::BuildRandomMrp(p);
}

void BM_TopK(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  efsa::Rng rng(7);
  efsa::Vector x = efsa::Vector::NullaryExpr(dim, [&] {
    return std::normal_distribution<double>()(rng);
  });
  efsa::Compressor q(efsa::CompressorSpec::TopK(dim / 10 + 1, dim));
  efsa::Vector out(dim);
  for (auto _ : state) {
    q.Compress(x, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_TopK)->Arg(10)->Arg(100)->Arg(1000);

void BM_ScaledSign(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  efsa::Vector x = efsa::Vector::LinSpaced(dim, -1.0, 2.0);
  efsa::Compressor q(efsa::CompressorSpec::ScaledSign(dim));
  efsa::Vector out(dim);
  for (auto _ : state) {
    q.Compress(x, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ScaledSign)->Arg(10)->Arg(100)->Arg(1000);

void BM_SteadyState(benchmark::State& state) {
  const efsa::Environment env = Env(static_cast<int>(state.range(0)), 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(efsa::SteadyStateQuantities(env));
  }
}
BENCHMARK(BM_SteadyState)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_EfTdMarkovStep(benchmark::State& state) {
  const efsa::Environment env = Env(100, 10);
  const efsa::SteadyState ss = efsa::SteadyStateQuantities(env);
  auto sampler = efsa::MakeSampler(
      efsa::SamplerKind::kMarkov,
      std::make_shared<const efsa::TransitionTable>(env.mrp), ss.pi, 3);
  efsa::Compressor q(efsa::CompressorSpec::TopK(2, env.K()));
  efsa::AgentState s = efsa::AgentState::Initial(efsa::Vector::Zero(env.K()));
  for (auto _ : state) {
    efsa::EfTdStep(s, sampler->Next(), env.features, env.gamma(), 0.01, q, {});
  }
  benchmark::DoNotOptimize(s.theta.data());
}
BENCHMARK(BM_EfTdMarkovStep);

void BM_MultiAgentRound(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const efsa::Environment env = Env(100, 10);
  const efsa::SteadyState ss = efsa::SteadyStateQuantities(env);
  efsa::FleetState fleet =
      efsa::MakeFleet(env, ss, M, efsa::CompressorSpec::ScaledSign(env.K()), 5);
  efsa::ServerState server{efsa::Vector::Zero(env.K()), 0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        efsa::MultiAgentRound(server, fleet, env.features, env.gamma(), 0.01));
  }
  state.SetItemsProcessed(state.iterations() * M);
}
BENCHMARK(BM_MultiAgentRound)->Arg(1)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
