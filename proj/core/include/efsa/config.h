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

// Experiment configuration: JSON schema, validation and figure presets.

#ifndef EFSA_CONFIG_H_
#define EFSA_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "efsa/common.h"
#include "efsa/ef_td.h"
#include "efsa/env_model.h"

namespace efsa {

inline constexpr int kConfigSchema = 1;

struct EnvSource {
  std::optional<std::string> path;  // env JSON written by gen-env
  EnvironmentParams params;         // used when path is unset
};

enum class SweepAxis { kK, kM, kAlpha, kDelta };

const char* ToString(SweepAxis axis);
SweepAxis ParseSweepAxis(const std::string& text);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kK;
  std::vector<double> values;
};

struct ExperimentConfig {
  int schema = kConfigSchema;
  std::string label = "run";
  EnvSource env;
  Algorithm algorithm = Algorithm::kEfTd;
  SamplerKind sampler = SamplerKind::kIid;
  std::string compressor = "identity";
  std::optional<double> alpha;  // nullopt selects the theorem default
  std::int64_t T = 50000;
  int trials = 30;
  int M = 1;
  bool projection = false;
  std::optional<double> G;      // nullopt selects the default radius
  std::int64_t record_every = 100;
  bool averaging = true;
  std::optional<double> A_override;
  std::string map;              // "td" | "synthetic", ef_sa only
  std::uint64_t seed = 1;
  std::optional<std::vector<double>> theta0;
  std::string output_dir = "out";
  int value_bits = 32;
  std::optional<SweepSpec> sweep;
};

// Throws InvalidArgument on malformed JSON, unknown keys or bad values.
ExperimentConfig ParseConfig(const std::string& json_text);
ExperimentConfig LoadConfig(const std::string& path);
std::string ConfigToJson(const ExperimentConfig& config);

// Field-level and cross-field checks that do not need the environment.
void ValidateConfig(const ExperimentConfig& config);

// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string ConfigHash(const ExperimentConfig& config);

Algorithm ParseAlgorithm(const std::string& text);
SamplerKind ParseSampler(const std::string& text);

// Named figure presets; each expands to one or more labeled configs.
std::vector<std::string> PresetNames();
std::vector<ExperimentConfig> ExpandPreset(const std::string& name);

}  // namespace efsa

#endif  // EFSA_CONFIG_H_
