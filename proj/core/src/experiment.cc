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

#include "efsa/experiment.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "efsa/multi_agent.h"
#include "efsa/nonlinear_sa.h"
#include "efsa/parallel.h"
#include "efsa/trace_io.h"

namespace efsa {
namespace {

std::string WithK(const std::string& compressor, int k, int K) {
  const CompressorSpec spec = CompressorSpec::Parse(compressor, K);
  switch (spec.kind) {
    case CompressorKind::kTopK: return "topk:" + std::to_string(k);
    case CompressorKind::kRandK: return "randk:" + std::to_string(k);
    default:
      throw InvalidArgument("sweeping k needs a topk or randk compressor");
  }
}

int EnvironmentK(const ExperimentConfig& config, const PreparedEnvironment& p) {
  (void)config;
  return p.env.K();
}

}  // namespace

PreparedEnvironment PrepareEnvironment(const EnvSource& source) {
  PreparedEnvironment p;
  p.env = source.path ? LoadEnvironment(*source.path) : BuildRandomMrp(source.params);
  p.ss = SteadyStateQuantities(p.env);
  return p;
}

double ResolveAlpha(const ExperimentConfig& config, const CompressorSpec& spec) {
  if (config.alpha) return *config.alpha;
  const double gamma = config.env.params.gamma;
  const double delta = config.algorithm == Algorithm::kTd0 ? 1.0 : RequireDelta(spec);
  return TheoremDefaultAlpha(config.sampler, gamma, delta);
}

ExperimentResult RunExperiment(const ExperimentConfig& config, int workers,
                               const PreparedEnvironment* prepared) {
  ValidateConfig(config);
  PreparedEnvironment own;
  if (!prepared) {
    own = PrepareEnvironment(config.env);
    prepared = &own;
  }
  const Environment& env = prepared->env;
  const SteadyState& ss = prepared->ss;
  const int K = env.K();

  ExperimentConfig resolved = config;
  if (config.env.path) resolved.env.params.gamma = env.gamma();
  const CompressorSpec spec = CompressorSpec::Parse(config.compressor, K);
  if (config.theta0 && static_cast<int>(config.theta0->size()) != K)
    throw InvalidArgument("theta0 must have K entries");

  RunSpec run;
  run.algorithm = config.algorithm;
  run.sampler = config.sampler;
  run.compressor = spec;
  run.alpha = ResolveAlpha(resolved, spec);
  run.T = config.T;
  run.record_every = config.record_every;
  run.value_bits = config.value_bits;
  if (config.theta0)
    run.theta0 = Eigen::Map<const Vector>(config.theta0->data(), K);

  ExperimentResult result;
  result.config = config;
  result.config_hash = ConfigHash(config);
  run.config_hash = result.config_hash;

  std::optional<UpdateMap> map;
  if (config.algorithm == Algorithm::kEfSa)
    map = config.map == "td" ? TdUpdateMap(env, ss)
                             : SyntheticUpdateMap(env, ss, env.seed);
  const Vector& theta_star = map ? map->theta_star : ss.theta_star;
  if (config.projection) {
    run.projection.enabled = true;
    run.projection.G = config.G.value_or(DefaultProjectionRadius(theta_star));
  }

  result.traces.resize(config.trials);
  ParallelFor(static_cast<std::size_t>(config.trials), workers, [&](std::size_t i) {
    RunSpec trial = run;
    trial.seed = DeriveSeed(config.seed, Stream::kTrial, i);
    Trace trace;
    if (config.algorithm == Algorithm::kMultiAgent) {
      MultiAgentSpec ma;
      ma.run = trial;
      ma.M = config.M;
      ma.averaging = config.averaging;
      ma.A_override = config.A_override;
      trace = RunMultiAgent(env, ss, ma);
    } else if (map) {
      trace = RunEfSa(env, ss, *map, trial);
    } else {
      trace = RunSingleAgent(env, ss, trial);
    }
    result.traces[i] = std::move(trace);
  });

  result.aggregate = Aggregate(result.traces);
  ExperimentSummary& s = result.summary;
  s.label = config.label;
  s.trials = config.trials;
  s.diverged = result.aggregate.diverged;
  s.alpha = run.alpha;
  s.delta = config.algorithm == Algorithm::kTd0
                ? 1.0
                : Delta(spec).value_or(std::numeric_limits<double>::quiet_NaN());
  const std::vector<double>& mean_E = result.aggregate.Mean("E");
  s.final_mean_E = mean_E.empty() ? std::numeric_limits<double>::quiet_NaN()
                                  : mean_E.back();
  s.rate = std::numeric_limits<double>::quiet_NaN();
  s.plateau = std::numeric_limits<double>::quiet_NaN();
  if (mean_E.size() >= 100 && s.diverged == 0) {
    RateEstimate est = FitRateAndPlateau(result.aggregate.t, mean_E);
    s.rate = est.geometric_rate;
    s.plateau = est.plateau;
  }
  return result;
}

void WriteExperimentFiles(const ExperimentResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string base = dir + "/" + result.config.label;
  for (std::size_t i = 0; i < result.traces.size(); ++i) {
    std::ostringstream out;
    WriteTraceCsv(out, result.traces[i]);
    WriteTextFile(base + "_trial" + std::to_string(i) + ".csv", out.str());
  }
  std::ostringstream agg;
  WriteAggregateCsv(agg, result.aggregate);
  WriteTextFile(base + "_aggregate.csv", agg.str());
  std::ostringstream summary;
  WriteSummaryCsv(summary, {result.summary});
  WriteTextFile(base + "_summary.csv", summary.str());
}

void WriteSummaryCsv(std::ostream& out,
                     const std::vector<ExperimentSummary>& summaries) {
  out << "label,trials,diverged,alpha,delta,final_mean_E,rate,plateau\n";
  for (const ExperimentSummary& s : summaries)
    out << s.label << ',' << s.trials << ',' << s.diverged << ','
        << FormatDouble(s.alpha) << ',' << FormatDouble(s.delta) << ','
        << FormatDouble(s.final_mean_E) << ',' << FormatDouble(s.rate) << ','
        << FormatDouble(s.plateau) << '\n';
}

std::vector<SweepPoint> RunSweep(const ExperimentConfig& config, int workers) {
  if (!config.sweep || config.sweep->values.empty())
    throw InvalidArgument("sweep needs an axis with at least one value");
  const PreparedEnvironment prepared = PrepareEnvironment(config.env);
  const int K = EnvironmentK(config, prepared);
  std::vector<SweepPoint> points;
  for (double value : config.sweep->values) {
    ExperimentConfig point = config;
    point.sweep.reset();
    std::ostringstream label;
    label << config.label << '_' << ToString(config.sweep->axis) << FormatDouble(value);
    point.label = label.str();
    switch (config.sweep->axis) {
      case SweepAxis::kK: {
        const int k = static_cast<int>(value);
        if (k != value) throw InvalidArgument("k values must be integers");
        point.compressor = WithK(config.compressor, k, K);
        break;
      }
      case SweepAxis::kDelta: {
        const double kk = K / value;
        const int k = static_cast<int>(std::lround(kk));
        if (std::abs(kk - k) > 1e-9 || k < 1)
          throw InvalidArgument("delta values must divide K");
        point.compressor = WithK(config.compressor, k, K);
        break;
      }
      case SweepAxis::kM: {
        const int M = static_cast<int>(value);
        if (M != value || M < 1) throw InvalidArgument("M values must be positive integers");
        point.M = M;
        break;
      }
      case SweepAxis::kAlpha:
        point.alpha = value;
        break;
    }
    ExperimentResult r = RunExperiment(point, workers, &prepared);
    points.push_back({value, r.summary});
  }
  return points;
}

void WriteSweepCsv(std::ostream& out, SweepAxis axis,
                   const std::vector<SweepPoint>& points) {
  out << ToString(axis) << ",label,trials,diverged,alpha,delta,final_mean_E,rate,plateau\n";
  for (const SweepPoint& p : points) {
    const ExperimentSummary& s = p.summary;
    out << FormatDouble(p.value) << ',' << s.label << ',' << s.trials << ','
        << s.diverged << ',' << FormatDouble(s.alpha) << ',' << FormatDouble(s.delta)
        << ',' << FormatDouble(s.final_mean_E) << ',' << FormatDouble(s.rate) << ','
        << FormatDouble(s.plateau) << '\n';
  }
}

}  // namespace efsa
