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

#include "efsa/config.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "efsa/compression.h"
#include "json.hpp"

namespace efsa {
namespace {

using nlohmann::json;

void RejectUnknown(const json& obj, const std::set<std::string>& allowed,
                   const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key))
      throw InvalidArgument("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T Get(const json& obj, const char* key, const T& fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::optional<double> GetOptionalNumber(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number())
    throw InvalidArgument(std::string("'") + key + "' must be a number");
  return it->get<double>();
}

EnvSource ParseEnv(const json& j) {
  if (!j.is_object()) throw InvalidArgument("'env' must be an object");
  RejectUnknown(j, {"path", "n", "K", "gamma", "reward_range", "mixing_eps", "seed"},
                "env");
  EnvSource env;
  if (j.contains("path")) {
    env.path = Get<std::string>(j, "path", "");
    if (j.size() != 1) throw InvalidArgument("env.path excludes other env keys");
    return env;
  }
  EnvironmentParams& p = env.params;
  p.n = Get<int>(j, "n", p.n);
  p.K = Get<int>(j, "K", p.K);
  p.gamma = Get<double>(j, "gamma", p.gamma);
  p.mixing_eps = Get<double>(j, "mixing_eps", p.mixing_eps);
  p.seed = Get<std::uint64_t>(j, "seed", p.seed);
  if (j.contains("reward_range")) {
    auto r = Get<std::vector<double>>(j, "reward_range", {});
    if (r.size() != 2) throw InvalidArgument("reward_range needs two numbers");
    p.reward_range = {r[0], r[1]};
  }
  return env;
}

json EnvToJson(const EnvSource& env) {
  if (env.path) return json{{"path", *env.path}};
  const EnvironmentParams& p = env.params;
  return json{{"n", p.n},
              {"K", p.K},
              {"gamma", p.gamma},
              {"reward_range", {p.reward_range.lo, p.reward_range.hi}},
              {"mixing_eps", p.mixing_eps},
              {"seed", p.seed}};
}

void ValidateEnvParams(const EnvironmentParams& p) {
  if (p.n < 2) throw InvalidArgument("env.n must be at least 2");
  if (p.K < 1 || p.K >= p.n) throw InvalidArgument("env.K must satisfy 1 <= K < n");
  if (!(p.gamma > 0.0 && p.gamma < 1.0))
    throw InvalidArgument("env.gamma must lie in (0, 1)");
  if (!(p.mixing_eps >= 0.0 && p.mixing_eps < 1.0))
    throw InvalidArgument("env.mixing_eps must lie in [0, 1)");
  if (!(p.reward_range.lo <= p.reward_range.hi))
    throw InvalidArgument("env.reward_range is empty");
}

ExperimentConfig BaseConfig(const std::string& label, int n, int K,
                            double gamma, RewardRange rewards) {
  ExperimentConfig c;
  c.label = label;
  c.env.params.n = n;
  c.env.params.K = K;
  c.env.params.gamma = gamma;
  c.env.params.reward_range = rewards;
  c.env.params.mixing_eps = 0.01;
  c.env.params.seed = 7;
  c.seed = 2026;
  c.trials = 30;
  c.output_dir = "out/" + label;
  return c;
}

}  // namespace

const char* ToString(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kK: return "k";
    case SweepAxis::kM: return "M";
    case SweepAxis::kAlpha: return "alpha";
    case SweepAxis::kDelta: return "delta";
  }
  return "?";
}

SweepAxis ParseSweepAxis(const std::string& text) {
  if (text == "k") return SweepAxis::kK;
  if (text == "M") return SweepAxis::kM;
  if (text == "alpha") return SweepAxis::kAlpha;
  if (text == "delta") return SweepAxis::kDelta;
  throw InvalidArgument("unknown sweep axis '" + text + "'");
}

Algorithm ParseAlgorithm(const std::string& text) {
  for (Algorithm a : {Algorithm::kTd0, Algorithm::kEfTd, Algorithm::kEfTdNoFeedback,
                      Algorithm::kEfSa, Algorithm::kMultiAgent})
    if (text == ToString(a)) return a;
  throw InvalidArgument("unknown algorithm '" + text + "'");
}

SamplerKind ParseSampler(const std::string& text) {
  for (SamplerKind s : {SamplerKind::kMeanPath, SamplerKind::kIid, SamplerKind::kMarkov})
    if (text == ToString(s)) return s;
  throw InvalidArgument("unknown sampler '" + text + "'");
}

ExperimentConfig ParseConfig(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  RejectUnknown(j,
                {"schema", "label", "env", "algorithm", "sampler", "compressor",
                 "alpha", "T", "trials", "M", "projection", "record_every",
                 "averaging", "A_override", "map", "seed", "theta0",
                 "output_dir", "value_bits", "sweep"},
                "config");
  if (!j.contains("schema")) throw InvalidArgument("config lacks 'schema'");
  ExperimentConfig c;
  c.schema = Get<int>(j, "schema", 0);
  if (c.schema != kConfigSchema)
    throw InvalidArgument("unsupported config schema " + std::to_string(c.schema));
  c.label = Get<std::string>(j, "label", c.label);
  if (j.contains("env")) c.env = ParseEnv(j["env"]);
  c.algorithm = ParseAlgorithm(Get<std::string>(j, "algorithm", ToString(c.algorithm)));
  c.sampler = ParseSampler(Get<std::string>(j, "sampler", ToString(c.sampler)));
  c.compressor = Get<std::string>(j, "compressor", c.compressor);
  if (j.contains("alpha")) {
    const json& a = j["alpha"];
    if (a.is_string()) {
      if (a.get<std::string>() != "theorem_default")
        throw InvalidArgument("alpha must be a number or \"theorem_default\"");
      c.alpha.reset();
    } else {
      c.alpha = GetOptionalNumber(j, "alpha");
    }
  } else {
    c.alpha.reset();
  }
  c.T = Get<std::int64_t>(j, "T", c.T);
  c.trials = Get<int>(j, "trials", c.trials);
  c.M = Get<int>(j, "M", c.M);
  if (j.contains("projection")) {
    const json& p = j["projection"];
    if (!p.is_object()) throw InvalidArgument("'projection' must be an object");
    RejectUnknown(p, {"enabled", "G"}, "projection");
    c.projection = Get<bool>(p, "enabled", false);
    if (p.contains("G") && p["G"].is_string()) {
      if (p["G"].get<std::string>() != "default")
        throw InvalidArgument("projection.G must be a number or \"default\"");
    } else {
      c.G = GetOptionalNumber(p, "G");
    }
  }
  c.record_every = Get<std::int64_t>(j, "record_every", c.record_every);
  c.averaging = Get<bool>(j, "averaging", c.averaging);
  c.A_override = GetOptionalNumber(j, "A_override");
  c.map = Get<std::string>(j, "map", c.map);
  c.seed = Get<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("theta0") && !j["theta0"].is_null())
    c.theta0 = Get<std::vector<double>>(j, "theta0", {});
  c.output_dir = Get<std::string>(j, "output_dir", c.output_dir);
  c.value_bits = Get<int>(j, "value_bits", c.value_bits);
  if (j.contains("sweep") && !j["sweep"].is_null()) {
    const json& s = j["sweep"];
    if (!s.is_object()) throw InvalidArgument("'sweep' must be an object");
    RejectUnknown(s, {"axis", "values"}, "sweep");
    SweepSpec sweep;
    sweep.axis = ParseSweepAxis(Get<std::string>(s, "axis", ""));
    sweep.values = Get<std::vector<double>>(s, "values", {});
    c.sweep = std::move(sweep);
  }
  ValidateConfig(c);
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

std::string ConfigToJson(const ExperimentConfig& c) {
  json j;
  j["schema"] = c.schema;
  j["label"] = c.label;
  j["env"] = EnvToJson(c.env);
  j["algorithm"] = ToString(c.algorithm);
  j["sampler"] = ToString(c.sampler);
  j["compressor"] = c.compressor;
  if (c.alpha) j["alpha"] = *c.alpha;
  else j["alpha"] = "theorem_default";
  j["T"] = c.T;
  j["trials"] = c.trials;
  j["M"] = c.M;
  j["projection"] = {{"enabled", c.projection}};
  if (c.G) j["projection"]["G"] = *c.G;
  else j["projection"]["G"] = "default";
  j["record_every"] = c.record_every;
  j["averaging"] = c.averaging;
  j["A_override"] = c.A_override ? json(*c.A_override) : json(nullptr);
  j["map"] = c.map;
  j["seed"] = c.seed;
  j["theta0"] = c.theta0 ? json(*c.theta0) : json(nullptr);
  j["output_dir"] = c.output_dir;
  j["value_bits"] = c.value_bits;
  if (c.sweep)
    j["sweep"] = {{"axis", ToString(c.sweep->axis)}, {"values", c.sweep->values}};
  return j.dump(2);
}

void ValidateConfig(const ExperimentConfig& c) {
  if (c.schema != kConfigSchema) throw InvalidArgument("unsupported config schema");
  if (c.label.empty()) throw InvalidArgument("label must not be empty");
  if (!c.env.path) ValidateEnvParams(c.env.params);
  if (c.T < 1) throw InvalidArgument("T must be at least 1");
  if (c.trials < 1) throw InvalidArgument("trials must be at least 1");
  if (c.record_every < 1) throw InvalidArgument("record_every must be at least 1");
  if (c.M < 1) throw InvalidArgument("M must be at least 1");
  if (c.value_bits < 1) throw InvalidArgument("value_bits must be at least 1");
  if (c.alpha && !(*c.alpha > 0.0 && *c.alpha < 1.0))
    throw InvalidArgument("alpha must lie in (0, 1)");
  if (c.M > 1 && c.algorithm != Algorithm::kMultiAgent)
    throw InvalidArgument("M > 1 requires algorithm multi_agent");
  if (c.algorithm == Algorithm::kMultiAgent) {
    if (c.sampler == SamplerKind::kMeanPath)
      throw InvalidArgument("mean_path excludes multi_agent");
    if (c.sampler != SamplerKind::kIid)
      throw InvalidArgument("multi_agent requires the iid sampler");
    if (c.projection) throw InvalidArgument("multi_agent does not support projection");
  }
  if (c.algorithm == Algorithm::kEfSa) {
    if (c.map != "td" && c.map != "synthetic")
      throw InvalidArgument("ef_sa requires map \"td\" or \"synthetic\"");
  } else if (!c.map.empty()) {
    throw InvalidArgument("map is only meaningful for ef_sa");
  }
  if (c.projection) {
    if (c.sampler == SamplerKind::kMeanPath)
      throw InvalidArgument("projection is not available on the mean path");
    if (c.G && !(*c.G > 0.0)) throw InvalidArgument("projection.G must be positive");
  }
  if (c.A_override && !(*c.A_override > 0.0))
    throw InvalidArgument("A_override must be positive");
  if (c.theta0 && c.theta0->empty()) throw InvalidArgument("theta0 must not be empty");
  if (c.sweep && c.sweep->values.empty())
    throw InvalidArgument("sweep axis has no values");
  if (!c.env.path) {
    const CompressorSpec spec = CompressorSpec::Parse(c.compressor, c.env.params.K);
    if (!c.alpha && c.algorithm != Algorithm::kTd0 && !Delta(spec))
      throw InvalidArgument("theorem_default alpha needs a contractive compressor");
    if (c.theta0 && static_cast<int>(c.theta0->size()) != c.env.params.K)
      throw InvalidArgument("theta0 must have K entries");
  }
}

std::string ConfigHash(const ExperimentConfig& config) {
  ExperimentConfig keyed = config;
  keyed.output_dir.clear();
  const std::string text = ConfigToJson(keyed);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> PresetNames() {
  return {"fig2_left", "fig2_right", "fig3", "fig4", "fig5"};
}

std::vector<ExperimentConfig> ExpandPreset(const std::string& name) {
  std::vector<ExperimentConfig> out;
  if (name == "fig2_left" || name == "fig2_right") {
    const double gamma = name == "fig2_left" ? 0.5 : 0.9;
    struct Arm {
      const char* suffix;
      Algorithm algorithm;
      const char* compressor;
    };
    for (const Arm& arm : {Arm{"td0", Algorithm::kTd0, "identity"},
                           Arm{"ef_sign", Algorithm::kEfTd, "signscaled"},
                           Arm{"sign", Algorithm::kEfTdNoFeedback, "signraw"}}) {
      ExperimentConfig c = BaseConfig(name + "_" + arm.suffix, 100, 10, gamma,
                                      {0.0, 10.0});
      c.algorithm = arm.algorithm;
      c.compressor = arm.compressor;
      c.sampler = SamplerKind::kMarkov;
      c.alpha = 0.05;
      c.T = 50000;
      c.record_every = 100;
      out.push_back(std::move(c));
    }
  } else if (name == "fig3") {
    for (int k : {1, 2, 5, 10, 25, 50}) {
      ExperimentConfig c =
          BaseConfig("fig3_top" + std::to_string(k), 100, 50, 0.5, {0.0, 1.0});
      c.algorithm = Algorithm::kEfTd;
      c.sampler = SamplerKind::kIid;
      c.compressor = "topk:" + std::to_string(k);
      // alpha = (1 - gamma) / (2 delta) with delta = K / k.
      c.alpha = 0.5 * k / (2.0 * 50.0);
      c.T = 200000;
      c.record_every = 200;
      out.push_back(std::move(c));
    }
  } else if (name == "fig4" || name == "fig5") {
    const char* compressor = name == "fig4" ? "signscaled" : "topk:2";
    for (int M : {1, 10, 100}) {
      ExperimentConfig c = BaseConfig(name + "_M" + std::to_string(M), 100, 10,
                                      0.3, {0.0, 1.0});
      c.algorithm = Algorithm::kMultiAgent;
      c.sampler = SamplerKind::kIid;
      c.compressor = compressor;
      c.M = M;
      c.alpha = 0.05;
      c.T = 20000;
      c.record_every = 50;
      out.push_back(std::move(c));
    }
  } else {
    throw InvalidArgument("unknown preset '" + name + "'");
  }
  for (ExperimentConfig& c : out) ValidateConfig(c);
  return out;
}

}  // namespace efsa
