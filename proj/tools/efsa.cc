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

// efsa: environment generation, experiment runs, sweeps, verification and
// trace reports.

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "efsa/analysis.h"
#include "efsa/compression.h"
#include "efsa/config.h"
#include "efsa/env_model.h"
#include "efsa/experiment.h"
#include "efsa/parallel.h"
#include "efsa/trace_io.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitVerifyFailed = 4;

struct EnvFlags {
  int n = 100;
  int K = 10;
  double gamma = 0.5;
  double reward_lo = 0.0;
  double reward_hi = 1.0;
  double mixing_eps = 0.01;
  std::uint64_t seed = 7;

  void Register(CLI::App* app) {
    app->add_option("--n", n, "Number of states");
    app->add_option("--K", K, "Number of features");
    app->add_option("--gamma", gamma, "Discount factor");
    app->add_option("--reward-lo", reward_lo, "Lower reward bound");
    app->add_option("--reward-hi", reward_hi, "Upper reward bound");
    app->add_option("--mixing-eps", mixing_eps, "Uniform mixing weight");
    app->add_option("--env-seed", seed, "Environment seed");
  }

  efsa::EnvironmentParams Params() const {
    efsa::EnvironmentParams p;
    p.n = n;
    p.K = K;
    p.gamma = gamma;
    p.reward_range = {reward_lo, reward_hi};
    p.mixing_eps = mixing_eps;
    p.seed = seed;
    return p;
  }
};

struct RunFlags {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out;
  int workers = efsa::DefaultWorkerCount();

  void Register(CLI::App* app) {
    auto* cfg = app->add_option("--config", config_path, "Experiment config (JSON)");
    auto* pre = app->add_option("--preset", preset, "Named preset")
                    ->check(CLI::IsMember(efsa::PresetNames()));
    cfg->excludes(pre);
    app->add_option("--seed", seed, "Master seed override");
    app->add_option("--trials", trials, "Trial count override");
    app->add_option("--out", out, "Output directory override");
    app->add_option("--workers", workers, "Worker threads")
        ->envname("EFSA_WORKERS")
        ->check(CLI::PositiveNumber);
  }

  std::vector<efsa::ExperimentConfig> Configs() const {
    std::vector<efsa::ExperimentConfig> configs;
    if (!config_path.empty()) configs.push_back(efsa::LoadConfig(config_path));
    else if (!preset.empty()) configs = efsa::ExpandPreset(preset);
    else throw efsa::InvalidArgument("one of --config or --preset is required");
    for (auto& c : configs) {
      if (seed) c.seed = *seed;
      if (trials) c.trials = *trials;
      if (!out.empty()) c.output_dir = out;
      efsa::ValidateConfig(c);
    }
    return configs;
  }
};

void PrintSummaries(const std::vector<efsa::ExperimentSummary>& rows) {
  std::cout << std::left << std::setw(28) << "label" << std::setw(8) << "trials"
            << std::setw(10) << "diverged" << std::setw(14) << "final_E"
            << std::setw(14) << "rate" << "plateau\n";
  for (const auto& s : rows) {
    std::cout << std::left << std::setw(28) << s.label << std::setw(8) << s.trials
              << std::setw(10) << s.diverged << std::setw(14) << s.final_mean_E
              << std::setw(14) << s.rate << s.plateau << '\n';
  }
}

int GenEnv(const EnvFlags& flags, const std::string& out) {
  const efsa::Environment env = efsa::BuildRandomMrp(flags.Params());
  const efsa::SteadyState ss = efsa::SteadyStateQuantities(env);
  std::filesystem::create_directories(out);
  efsa::WriteTextFile(out + "/env.json", efsa::EnvironmentToJson(env));
  efsa::WriteTextFile(out + "/ground_truth.json", efsa::GroundTruthToJson(ss));
  std::cout << "wrote " << out << "/env.json and " << out << "/ground_truth.json\n";
  return kExitOk;
}

int Run(const RunFlags& flags) {
  std::vector<efsa::ExperimentSummary> rows;
  int diverged = 0;
  for (const auto& config : flags.Configs()) {
    efsa::ExperimentResult r = efsa::RunExperiment(config, flags.workers);
    efsa::WriteExperimentFiles(r, config.output_dir);
    diverged += r.summary.diverged;
    rows.push_back(r.summary);
  }
  PrintSummaries(rows);
  if (diverged > 0) {
    std::cerr << diverged << " trial(s) diverged\n";
    return kExitDiverged;
  }
  return kExitOk;
}

std::vector<double> ParseValues(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw efsa::InvalidArgument("bad sweep value '" + item + "'");
    values.push_back(v);
  }
  return values;
}

int Sweep(const RunFlags& flags, const std::string& axis, const std::string& values) {
  std::vector<efsa::ExperimentConfig> configs = flags.Configs();
  int diverged = 0;
  for (auto& config : configs) {
    if (!axis.empty() || !values.empty()) {
      efsa::SweepSpec s;
      s.axis = efsa::ParseSweepAxis(axis.empty() ? "k" : axis);
      s.values = ParseValues(values);
      config.sweep = s;
    }
    if (!config.sweep || config.sweep->values.empty())
      throw efsa::InvalidArgument("sweep axis is empty");
    const auto points = efsa::RunSweep(config, flags.workers);
    std::ostringstream csv;
    efsa::WriteSweepCsv(csv, config.sweep->axis, points);
    std::filesystem::create_directories(config.output_dir);
    efsa::WriteTextFile(config.output_dir + "/" + config.label + "_sweep.csv", csv.str());
    std::cout << csv.str();
    for (const auto& p : points) diverged += p.summary.diverged;
    if (!flags.preset.empty()) break;  // presets share one sweep base
  }
  return diverged > 0 ? kExitDiverged : kExitOk;
}

int Verify(const EnvFlags& env_flags, const std::string& env_path, int trials,
           std::uint64_t seed) {
  const efsa::Environment env = env_path.empty()
                                    ? efsa::BuildRandomMrp(env_flags.Params())
                                    : efsa::LoadEnvironment(env_path);
  const efsa::SteadyState ss = efsa::SteadyStateQuantities(env);
  efsa::LemmaSuiteOptions options;
  options.trials = trials;
  options.seed = seed;
  const efsa::LemmaReport report = efsa::VerifyAllLemmas(env, ss, options);

  std::cout << std::left << std::setw(28) << "lemma" << std::setw(10) << "trials"
            << std::setw(16) << "worst_margin" << "pass\n";
  for (const auto& r : report.results) {
    std::cout << std::left << std::setw(28) << r.id << std::setw(10) << r.trials
              << std::setw(16) << r.worst_margin << (r.pass ? "yes" : "NO") << '\n';
    if (!r.pass) std::cout << "  witness: " << r.witness.transpose() << '\n';
  }
  const int K = env.K();
  std::cout << "\ncompressor contraction (non-contractive operators are exempt)\n";
  for (const auto& spec :
       {efsa::CompressorSpec::Identity(K), efsa::CompressorSpec::TopK(1, K),
        efsa::CompressorSpec::ScaledSign(K), efsa::CompressorSpec::RawSign(K),
        efsa::CompressorSpec::RandK(1, K)}) {
    const auto c = efsa::VerifyContraction(spec, trials, seed);
    std::cout << std::left << std::setw(28) << spec.ToString() << std::setw(16)
              << c.max_ratio << (c.pass ? "yes" : (spec.contractive() ? "NO" : "exempt"))
              << '\n';
  }
  return report.all_pass() ? kExitOk : kExitVerifyFailed;
}

int Report(const std::vector<std::string>& files, const std::string& out) {
  std::ostringstream csv;
  csv << "file,rate,plateau,fit_begin,fit_end\n";
  int diverged = 0;
  for (const auto& f : files) {
    const efsa::Trace trace = efsa::ReadTraceCsvFile(f);
    if (trace.diverged) {
      ++diverged;
      csv << f << ",nan,nan,0,0\n";
      continue;
    }
    const efsa::RateEstimate est = efsa::FitRateAndPlateau(trace);
    csv << f << ',' << efsa::FormatDouble(est.geometric_rate) << ','
        << efsa::FormatDouble(est.plateau) << ',' << est.fit_begin << ','
        << est.fit_end << '\n';
  }
  if (out.empty()) std::cout << csv.str();
  else efsa::WriteTextFile(out, csv.str());
  return diverged > 0 ? kExitDiverged : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed TD learning and stochastic approximation with error feedback"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-env", "Generate a random environment");
  EnvFlags gen_env;
  gen_env.Register(gen);
  std::string gen_out = ".";
  gen->add_option("--out", gen_out, "Output directory");
  std::uint64_t gen_seed = 0;
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Environment seed");

  auto* run = app.add_subcommand("run", "Run an experiment or preset");
  RunFlags run_flags;
  run_flags.Register(run);

  auto* sweep = app.add_subcommand("sweep", "Sweep one axis of an experiment");
  RunFlags sweep_flags;
  sweep_flags.Register(sweep);
  std::string axis, values;
  sweep->add_option("--axis", axis, "k | M | alpha | delta");
  sweep->add_option("--values", values, "Comma-separated axis values");

  auto* verify = app.add_subcommand("verify", "Run the lemma verification suite");
  EnvFlags verify_env;
  verify_env.Register(verify);
  std::string env_path;
  int verify_trials = 10000;
  std::uint64_t verify_seed = 1;
  verify->add_option("--env", env_path, "Environment JSON written by gen-env");
  verify->add_option("--trials", verify_trials, "Random inputs per inequality")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_seed, "Checker seed");

  auto* report = app.add_subcommand("report", "Fit rate and plateau of traces");
  std::vector<std::string> files;
  std::string report_out;
  report->add_option("traces", files, "Trace CSV files")->required();
  report->add_option("--out", report_out, "Write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      if (*gen_seed_opt) gen_env.seed = gen_seed;
      return GenEnv(gen_env, gen_out);
    }
    if (*run) return Run(run_flags);
    if (*sweep) return Sweep(sweep_flags, axis, values);
    if (*verify) return Verify(verify_env, env_path, verify_trials, verify_seed);
    if (*report) return Report(files, report_out);
  } catch (const efsa::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const efsa::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
