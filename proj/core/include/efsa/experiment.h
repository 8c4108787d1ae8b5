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

// Runs configured experiments: trials in parallel, aggregation, summaries,
// sweeps and output files.

#ifndef EFSA_EXPERIMENT_H_
#define EFSA_EXPERIMENT_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "efsa/analysis.h"
#include "efsa/config.h"
#include "efsa/env_model.h"
#include "efsa/trace.h"

namespace efsa {

struct PreparedEnvironment {
  Environment env;
  SteadyState ss;
};

PreparedEnvironment PrepareEnvironment(const EnvSource& source);

// Explicit alpha, or the theorem default for the sampler and delta.
double ResolveAlpha(const ExperimentConfig& config, const CompressorSpec& spec);

struct ExperimentSummary {
  std::string label;
  int trials = 0;
  int diverged = 0;
  double alpha = 0.0;
  double delta = 0.0;
  double final_mean_E = 0.0;
  double rate = 0.0;     // NaN when the aggregate is too short to fit
  double plateau = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<Trace> traces;
  AggregateTrace aggregate;
  ExperimentSummary summary;
};

// Trial i uses the seed DeriveSeed(config.seed, kTrial, i); the result does
// not depend on the number of workers.
ExperimentResult RunExperiment(const ExperimentConfig& config, int workers,
                               const PreparedEnvironment* prepared = nullptr);

// <dir>/<label>_trial<i>.csv, <dir>/<label>_aggregate.csv and
// <dir>/<label>_summary.csv.
void WriteExperimentFiles(const ExperimentResult& result, const std::string& dir);

void WriteSummaryCsv(std::ostream& out,
                     const std::vector<ExperimentSummary>& summaries);

struct SweepPoint {
  double value = 0.0;
  ExperimentSummary summary;
};

// One experiment per value of config.sweep; k and delta rewrite the
// compressor, M and alpha the corresponding fields.
std::vector<SweepPoint> RunSweep(const ExperimentConfig& config, int workers);
void WriteSweepCsv(std::ostream& out, SweepAxis axis,
                   const std::vector<SweepPoint>& points);

}  // namespace efsa

#endif  // EFSA_EXPERIMENT_H_
