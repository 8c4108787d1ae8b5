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

// Lyapunov evaluators, bound envelopes, the lemma verification suite and
// rate/plateau extraction from traces.

#ifndef EFSA_ANALYSIS_H_
#define EFSA_ANALYSIS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "efsa/common.h"
#include "efsa/compression.h"
#include "efsa/env_model.h"
#include "efsa/trace.h"

namespace efsa {

// psi = ||theta + alpha e - theta*||^2 + alpha^2 ||e||^2.
double LyapunovPsi(const Vector& theta, const Vector& e, double alpha,
                   const Vector& theta_star);

// Xi = ||theta + alpha e_bar - theta*||^2 + C alpha^3 (1/M) sum ||e_i||^2,
// with C = 20 delta / (1 - gamma). Single trial; callers average.
double LyapunovXi(const Vector& theta, std::span<const Vector> memories,
                  double alpha, double delta, double gamma,
                  const Vector& theta_star);

inline double XiMemoryWeight(double delta, double gamma) {
  return 20.0 * delta / (1.0 - gamma);
}

enum class Theorem { kMeanPath = 1, kIid = 2, kMarkov = 3, kNonlinear = 4,
                     kMultiAgent = 5 };

// Parameters of a theorem bound. `big_o` multiplies every asymptotic term
// whose constant is not pinned down; `rate_constant` is the C inside the
// linear rates (1024 mean path, 2048 i.i.d. by default).
struct BoundEnvelope {
  Theorem theorem = Theorem::kMeanPath;
  double alpha = 0.0;
  double delta = 1.0;
  double gamma = 0.5;
  double omega = 0.0;
  double beta = 0.0;
  int tau = 0;
  double G = 1.0;
  double sigma_sq = 0.0;
  int M = 1;
  double initial_error = 0.0;  // ||theta_0 - theta*||^2
  double rate_constant = 0.0;  // 0 selects the default for the theorem
  double big_o = 1.0;

  double operator()(std::int64_t t) const;
};

std::vector<double> TheoremEnvelope(const BoundEnvelope& env,
                                    std::span<const std::int64_t> ts);

struct LemmaResult {
  std::string id;
  std::string description;
  int trials = 0;
  double worst_margin = 0.0;  // min over trials of (rhs - lhs); >= -slack passes
  bool pass = true;
  Vector witness;             // input attaining worst_margin
};

struct LemmaReport {
  std::vector<LemmaResult> results;
  bool all_pass() const;
};

struct LemmaSuiteOptions {
  int trials = 10000;
  std::uint64_t seed = 0;
  double slack = 1e-9;
  // Steps of the projected Markov run used for the uniform-bound check.
  std::int64_t uniform_bound_steps = 20000;
};

// Runs every inequality the analysis relies on (norm sandwich,
// pseudo-gradient, direction bound, variance bound, both Lipschitz
// properties, memory contraction, compressor contraction and acute angle,
// uniform bounds under projection) on randomized inputs.
LemmaReport VerifyAllLemmas(const Environment& env, const SteadyState& ss,
                            const LemmaSuiteOptions& options = {});

// E_X~pi ||g(X, theta)||^2 by exact enumeration over (s, s').
double ExpectedDirectionNormSq(const Environment& env, const SteadyState& ss,
                               const Vector& theta);

struct RateEstimate {
  double geometric_rate = 1.0;  // per-step contraction factor
  double plateau = 0.0;         // mean of the final 10% of records
  std::size_t fit_begin = 0;    // [fit_begin, fit_end) record indices
  std::size_t fit_end = 0;
};

// Least squares on log E over the leading segment where E >= 10 * plateau.
RateEstimate FitRateAndPlateau(std::span<const std::int64_t> t,
                               std::span<const double> values);
RateEstimate FitRateAndPlateau(const Trace& trace);

// Across-trial mean and sample std of every numeric column, aligned on the
// record index (traces must share a recording schedule).
struct AggregateTrace {
  std::vector<std::int64_t> t;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> mean;  // [column][record]
  std::vector<std::vector<double>> std;
  int trials = 0;
  int diverged = 0;

  const std::vector<double>& Mean(const std::string& column) const;
};

AggregateTrace Aggregate(std::span<const Trace> traces);

}  // namespace efsa

#endif  // EFSA_ANALYSIS_H_
