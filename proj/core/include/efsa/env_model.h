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

// Markov reward processes with linear value-function approximation: random
// environment synthesis, exact steady-state quantities, and the two data
// models (i.i.d. from the stationary law, or one Markov trajectory).

#ifndef EFSA_ENV_MODEL_H_
#define EFSA_ENV_MODEL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "efsa/common.h"

namespace efsa {

struct RewardRange {
  double lo = 0.0;
  double hi = 1.0;
};

// Chain induced by a fixed policy. P is row-stochastic.
struct Mrp {
  Matrix P;
  Vector R;
  double gamma = 0.5;

  int n() const { return static_cast<int>(R.size()); }
};

// Rows of phi are the state features phi(s).
struct FeatureMap {
  RowMatrix phi;

  int K() const { return static_cast<int>(phi.cols()); }
  auto row(int s) const { return phi.row(s); }
};

// An MRP together with its features and the parameters that generated it.
struct Environment {
  Mrp mrp;
  FeatureMap features;
  std::uint64_t seed = 0;
  double mixing_eps = 0.0;
  RewardRange reward_range;

  int n() const { return mrp.n(); }
  int K() const { return features.K(); }
  double gamma() const { return mrp.gamma; }
};

// Observation X_t = (s_t, s_{t+1}, r_t) with r_t = R(s_t).
struct DataTuple {
  int s = 0;
  int s_next = 0;
  double r = 0.0;
};

// Exact stationary quantities of an environment.
struct SteadyState {
  Vector pi;
  Matrix Sigma;       // Phi^T D Phi
  double omega = 0;   // lambda_min(Sigma)
  Matrix Abar;        // Phi^T D (gamma P - I) Phi
  Vector bbar;        // -Phi^T D R
  Vector theta_star;  // Abar theta* = bbar
  double sigma_sq = 0;  // E_pi ||g(X, theta*)||^2
  std::optional<int> tau;  // mixing time, filled per experiment
};

struct EnvironmentParams {
  int n = 100;
  int K = 10;
  double gamma = 0.5;
  RewardRange reward_range;
  double mixing_eps = 0.01;
  std::uint64_t seed = 0;
};

// Dirichlet(1) rows mixed with the uniform kernel,
// P = (1 - eps) P_raw + eps / n; rewards uniform in the range; Gaussian
// features scaled by the largest row norm and redrawn until rank K.
Environment BuildRandomMrp(const EnvironmentParams& params);

// Throws InvalidArgument if P is not row-stochastic, rewards are outside
// the configured range, phi has a row of norm > 1, or phi is rank-deficient.
void ValidateEnvironment(const Environment& env);

// Power iteration pi <- pi P until ||pi P - pi||_1 <= tol.
Vector StationaryDistribution(const Mrp& mrp, double tol = 1e-12,
                              int max_iter = 1000000);

SteadyState SteadyStateQuantities(const Mrp& mrp, const FeatureMap& features);
inline SteadyState SteadyStateQuantities(const Environment& env) {
  return SteadyStateQuantities(env.mrp, env.features);
}

// g_bar(theta) = Abar theta - bbar.
Vector MeanPathDirection(const SteadyState& ss, const Vector& theta);

// g(X, theta) = (r + gamma <phi(s'), theta> - <phi(s), theta>) phi(s).
void SampleTdDirection(const DataTuple& x, const FeatureMap& features,
                       double gamma, const Vector& theta, Vector& out);
Vector SampleTdDirection(const DataTuple& x, const FeatureMap& features,
                         double gamma, const Vector& theta);

// ||Phi (theta1 - theta2)||_D^2 = (theta1 - theta2)^T Sigma (theta1 - theta2).
double DNormSq(const SteadyState& ss, const Vector& theta1,
               const Vector& theta2);

// Cumulative transition rows shared by all samplers of one chain.
class TransitionTable {
 public:
  explicit TransitionTable(const Mrp& mrp);

  int n() const { return n_; }
  int SampleNext(int s, double u) const;
  double reward(int s) const { return rewards_[s]; }

 private:
  int n_;
  std::vector<double> cumulative_;  // row-major n x n
  std::vector<double> rewards_;
};

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual DataTuple Next() = 0;
};

// One trajectory: each tuple starts where the previous one ended. The
// initial state is uniform over states.
class MarkovSampler final : public Sampler {
 public:
  MarkovSampler(std::shared_ptr<const TransitionTable> table,
                std::uint64_t seed);
  DataTuple Next() override;

 private:
  std::shared_ptr<const TransitionTable> table_;
  Rng rng_;
  int state_;
};

// s ~ pi and s' ~ P(s, .) drawn afresh at every step.
class IidSampler final : public Sampler {
 public:
  IidSampler(std::shared_ptr<const TransitionTable> table, const Vector& pi,
             std::uint64_t seed);
  DataTuple Next() override;

 private:
  std::shared_ptr<const TransitionTable> table_;
  std::vector<double> pi_cumulative_;
  Rng rng_;
};

// Tuple-to-direction amplification used to turn a distance between state
// distributions into the direction-level mixing criterion.
inline double MixingAmplification(double gamma) { return 2.0 + gamma; }

// Smallest t >= 1 with max_s ||P^t(s, .) - pi||_1 <= eps / (2 + gamma),
// found by explicit matrix powering.
int MixingTime(const Mrp& mrp, const Vector& pi, double eps, int cap = 100000);

}  // namespace efsa

#endif  // EFSA_ENV_MODEL_H_
