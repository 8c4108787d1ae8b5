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

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "efsa/ef_td.h"
#include "efsa/env_model.h"

namespace efsa {
namespace {

Environment TwoStateEnv() {
  Environment env;
  env.mrp.P = Matrix::Constant(2, 2, 0.5);
  env.mrp.R = Vector(2);
  env.mrp.R << 1.0, 0.0;
  env.mrp.gamma = 0.5;
  env.features.phi = RowMatrix(2, 1);
  env.features.phi << 1.0, 0.0;
  return env;
}

Environment SmallEnv(int n, int K, std::uint64_t seed) {
  EnvironmentParams p;
  p.n = n;
  p.K = K;
  p.gamma = 0.7;
  p.mixing_eps = 0.05;
  p.seed = seed;
  return BuildRandomMrp(p);
}

Vector EnumeratedMeanDirection(const Environment& env, const SteadyState& ss,
                               const Vector& theta) {
  Vector sum = Vector::Zero(env.K());
  for (int s = 0; s < env.n(); ++s)
    for (int t = 0; t < env.n(); ++t) {
      DataTuple x{s, t, env.mrp.R(s)};
      sum += ss.pi(s) * env.mrp.P(s, t) *
             SampleTdDirection(x, env.features, env.gamma(), theta);
    }
  return sum;
}

TEST(BuildRandomMrp, DefaultSizeIsValidWithFullRank) {
  EnvironmentParams p;
  p.n = 100;
  p.K = 10;
  p.gamma = 0.5;
  p.mixing_eps = 0.01;
  p.seed = 7;
  Environment env = BuildRandomMrp(p);
  EXPECT_NO_THROW(ValidateEnvironment(env));
  EXPECT_EQ(env.n(), 100);
  EXPECT_EQ(env.K(), 10);
  Eigen::FullPivLU<Matrix> lu(Matrix(env.features.phi));
  EXPECT_EQ(lu.rank(), 10);
  for (int s = 0; s < env.n(); ++s)
    EXPECT_LE(env.features.row(s).norm(), 1.0 + 1e-15);
  EXPECT_NEAR(env.mrp.P.rowwise().sum().maxCoeff(), 1.0, 1e-12);
  EXPECT_NEAR(env.mrp.P.rowwise().sum().minCoeff(), 1.0, 1e-12);
}

TEST(BuildRandomMrp, ConstantRewardDegenerateCase) {
  EnvironmentParams p;
  p.n = 2;
  p.K = 1;
  p.reward_range = {1.0, 1.0};
  p.mixing_eps = 0.0;
  p.seed = 0;
  Environment env = BuildRandomMrp(p);
  EXPECT_EQ(env.mrp.R(0), 1.0);
  EXPECT_EQ(env.mrp.R(1), 1.0);
  EXPECT_LE(env.features.phi.rowwise().norm().maxCoeff(), 1.0 + 1e-15);
}

TEST(BuildRandomMrp, MixingFloorOnEveryEntry) {
  EnvironmentParams p;
  p.n = 3;
  p.K = 2;
  p.gamma = 0.9;
  p.mixing_eps = 0.05;
  p.seed = 1;
  Environment env = BuildRandomMrp(p);
  EXPECT_GE(env.mrp.P.minCoeff(), 0.05 / 3 - 1e-15);
}

TEST(BuildRandomMrp, DeterministicPerSeed) {
  Environment a = SmallEnv(20, 4, 11);
  Environment b = SmallEnv(20, 4, 11);
  Environment c = SmallEnv(20, 4, 12);
  EXPECT_EQ(a.mrp.P, b.mrp.P);
  EXPECT_EQ(a.mrp.R, b.mrp.R);
  EXPECT_EQ(a.features.phi, b.features.phi);
  EXPECT_NE(a.mrp.P, c.mrp.P);
}

TEST(BuildRandomMrp, RejectsBadParameters) {
  EnvironmentParams p;
  p.n = 10;
  p.K = 10;
  EXPECT_THROW(BuildRandomMrp(p), InvalidArgument);
  p.K = 3;
  p.reward_range = {1.0, 0.0};
  EXPECT_THROW(BuildRandomMrp(p), InvalidArgument);
  p.reward_range = {0.0, 1.0};
  p.gamma = 1.0;
  EXPECT_THROW(BuildRandomMrp(p), InvalidArgument);
  p.gamma = 0.5;
  p.mixing_eps = 1.0;
  EXPECT_THROW(BuildRandomMrp(p), InvalidArgument);
}

TEST(ValidateEnvironment, RejectsLongFeatureRow) {
  Environment env = SmallEnv(10, 3, 2);
  env.features.phi.row(4) *= 1.5 / env.features.phi.row(4).norm();
  EXPECT_THROW(ValidateEnvironment(env), InvalidArgument);
}

TEST(ValidateEnvironment, RejectsNonStochasticRow) {
  Environment env = SmallEnv(10, 3, 2);
  env.mrp.P(3, 3) += 0.1;
  EXPECT_THROW(ValidateEnvironment(env), InvalidArgument);
}

TEST(StationaryDistribution, SymmetricChainIsUniform) {
  Mrp mrp;
  mrp.P = Matrix::Constant(2, 2, 0.5);
  mrp.R = Vector::Zero(2);
  Vector pi = StationaryDistribution(mrp);
  EXPECT_NEAR(pi(0), 0.5, 1e-15);
  EXPECT_NEAR(pi(1), 0.5, 1e-15);
}

TEST(StationaryDistribution, MatchesDenseEigenvector) {
  Environment env = SmallEnv(5, 2, 3);
  Vector pi = StationaryDistribution(env.mrp);
  Eigen::EigenSolver<Matrix> eig(env.mrp.P.transpose());
  int best = 0;
  for (int i = 1; i < 5; ++i)
    if (std::abs(eig.eigenvalues()(i) - 1.0) <
        std::abs(eig.eigenvalues()(best) - 1.0))
      best = i;
  Vector v = eig.eigenvectors().col(best).real();
  v /= v.sum();
  EXPECT_LE((pi - v).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GE(pi.minCoeff(), 0.0);
  EXPECT_NEAR(pi.sum(), 1.0, 1e-14);
  EXPECT_LE((pi.transpose() * env.mrp.P - pi.transpose()).lpNorm<1>(), 1e-12);
}

TEST(StationaryDistribution, PeriodicChainHitsIterationCap) {
  Mrp mrp;
  mrp.P = Matrix(3, 3);
  mrp.P << 0.0, 1.0, 0.0, 0.5, 0.0, 0.5, 0.0, 1.0, 0.0;
  mrp.R = Vector::Zero(3);
  EXPECT_THROW(StationaryDistribution(mrp, 1e-12, 500), ConvergenceError);
}

// Frozen from tests/oracles/two_state_oracle.py (exact rationals).
TEST(SteadyState, TwoStateHandExample) {
  Environment env = TwoStateEnv();
  SteadyState ss = SteadyStateQuantities(env);
  EXPECT_NEAR(ss.pi(0), 0.5, 1e-15);
  EXPECT_NEAR(ss.pi(1), 0.5, 1e-15);
  EXPECT_NEAR(ss.Sigma(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(ss.omega, 0.5, 1e-15);
  EXPECT_NEAR(ss.Abar(0, 0), -0.375, 1e-15);
  EXPECT_NEAR(ss.bbar(0), -0.5, 1e-15);
  EXPECT_NEAR(ss.theta_star(0), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(ss.sigma_sq, 1.0 / 18.0, 1e-14);
}

TEST(SteadyState, ZeroRewardGivesZeroFixedPoint) {
  Environment env = SmallEnv(12, 3, 5);
  env.mrp.R.setZero();
  SteadyState ss = SteadyStateQuantities(env);
  EXPECT_EQ(ss.bbar.norm(), 0.0);
  EXPECT_EQ(ss.theta_star.norm(), 0.0);
  EXPECT_EQ(ss.sigma_sq, 0.0);
}

TEST(SteadyState, FixedPointResidualOnDefaultSize) {
  EnvironmentParams p;
  p.seed = 7;
  Environment env = BuildRandomMrp(p);
  SteadyState ss = SteadyStateQuantities(env);
  EXPECT_LE(MeanPathDirection(ss, ss.theta_star).norm(), 1e-10);
  EXPECT_GT(ss.omega, 0.0);
}

TEST(SteadyState, SigmaSqMatchesEnumeration) {
  Environment env = SmallEnv(6, 2, 9);
  SteadyState ss = SteadyStateQuantities(env);
  double sum = 0.0;
  for (int s = 0; s < env.n(); ++s)
    for (int t = 0; t < env.n(); ++t) {
      DataTuple x{s, t, env.mrp.R(s)};
      sum += ss.pi(s) * env.mrp.P(s, t) *
             SampleTdDirection(x, env.features, env.gamma(), ss.theta_star)
                 .squaredNorm();
    }
  EXPECT_NEAR(ss.sigma_sq, sum, 1e-13);
}

TEST(MeanPathDirection, FixedPointAndOrigin) {
  Environment env = SmallEnv(8, 3, 4);
  SteadyState ss = SteadyStateQuantities(env);
  EXPECT_LE(MeanPathDirection(ss, ss.theta_star).norm(), 1e-12);
  Vector at_zero = MeanPathDirection(ss, Vector::Zero(3));
  EXPECT_LE((at_zero + ss.bbar).norm(), 1e-15);
}

TEST(MeanPathDirection, MatchesEnumeration) {
  Environment env = SmallEnv(5, 2, 3);
  SteadyState ss = SteadyStateQuantities(env);
  Rng rng(21);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    Vector theta(2);
    theta << 3 * normal(rng), 3 * normal(rng);
    Vector exact = EnumeratedMeanDirection(env, ss, theta);
    EXPECT_LE((MeanPathDirection(ss, theta) - exact).norm(), 1e-10);
  }
}

TEST(SampleTdDirection, ZeroFeatureRowGivesZero) {
  Environment env = TwoStateEnv();
  Vector theta = Vector::Constant(1, 3.7);
  DataTuple x{1, 0, 0.0};
  EXPECT_EQ(SampleTdDirection(x, env.features, 0.5, theta).norm(), 0.0);
}

TEST(SampleTdDirection, SameStateTransition) {
  Environment env = SmallEnv(6, 3, 8);
  Vector theta(3);
  theta << 0.4, -1.2, 2.0;
  DataTuple x{2, 2, 0.0};
  const double v = env.features.row(2).dot(theta);
  Vector expected = (env.gamma() - 1.0) * v * env.features.row(2).transpose();
  EXPECT_LE((SampleTdDirection(x, env.features, env.gamma(), theta) - expected)
                .norm(),
            1e-15);
}

TEST(SampleTdDirection, MatchesAffineForm) {
  Environment env = SmallEnv(6, 3, 8);
  Rng rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    Vector theta(3);
    for (int k = 0; k < 3; ++k) theta(k) = normal(rng);
    DataTuple x{static_cast<int>(rng() % 6), static_cast<int>(rng() % 6), 0};
    x.r = env.mrp.R(x.s);
    Vector phi_s = env.features.row(x.s).transpose();
    Vector phi_n = env.features.row(x.s_next).transpose();
    Matrix A = phi_s * (env.gamma() * phi_n - phi_s).transpose();
    Vector b = -phi_s * x.r;
    Vector g = SampleTdDirection(x, env.features, env.gamma(), theta);
    EXPECT_LE((g - (A * theta - b)).norm(), 1e-13);
  }
}

TEST(SampleTdDirection, TwoStateTupleByHand) {
  Environment env = TwoStateEnv();
  Vector theta = Vector::Constant(1, 0.25);
  // (1 + 0.5 * 0 - 0.25) * 1
  DataTuple x{0, 1, 1.0};
  EXPECT_DOUBLE_EQ(SampleTdDirection(x, env.features, 0.5, theta)(0), 0.75);
  // (1 + 0.5 * 0.25 - 0.25) * 1
  DataTuple y{0, 0, 1.0};
  EXPECT_DOUBLE_EQ(SampleTdDirection(y, env.features, 0.5, theta)(0), 0.875);
}

TEST(DNormSq, IsSigmaQuadraticForm) {
  Environment env = SmallEnv(7, 3, 6);
  SteadyState ss = SteadyStateQuantities(env);
  Vector a(3), b(3);
  a << 1, 2, 3;
  b << -1, 0, 0.5;
  Vector d = env.features.phi * (a - b);
  double direct = 0.0;
  for (int s = 0; s < env.n(); ++s) direct += ss.pi(s) * d(s) * d(s);
  EXPECT_NEAR(DNormSq(ss, a, b), direct, 1e-13);
}

Environment FlipChain(double mixing_eps) {
  Environment env;
  env.mrp.P = Matrix(2, 2);
  env.mrp.P << 0.0, 1.0, 1.0, 0.0;
  env.mrp.P = (1.0 - mixing_eps) * env.mrp.P +
              Matrix::Constant(2, 2, mixing_eps / 2.0);
  env.mrp.R = Vector::Zero(2);
  env.features.phi = RowMatrix::Identity(2, 1);
  return env;
}

TEST(MarkovSampler, TransitionFrequenciesMatchP) {
  Environment env = FlipChain(0.1);
  auto table = std::make_shared<const TransitionTable>(env.mrp);
  MarkovSampler sampler(table, 99);
  Matrix counts = Matrix::Zero(2, 2);
  DataTuple prev = sampler.Next();
  counts(prev.s, prev.s_next) += 1;
  for (int i = 1; i < 1000000; ++i) {
    DataTuple x = sampler.Next();
    ASSERT_EQ(x.s, prev.s_next);
    counts(x.s, x.s_next) += 1;
    prev = x;
  }
  for (int s = 0; s < 2; ++s) {
    const double row = counts.row(s).sum();
    for (int t = 0; t < 2; ++t)
      EXPECT_NEAR(counts(s, t) / row, env.mrp.P(s, t), 1e-2);
  }
}

TEST(MarkovSampler, SameSeedSameStream) {
  Environment env = SmallEnv(10, 2, 1);
  auto table = std::make_shared<const TransitionTable>(env.mrp);
  MarkovSampler a(table, 5), b(table, 5);
  for (int i = 0; i < 1000; ++i) {
    DataTuple x = a.Next(), y = b.Next();
    ASSERT_EQ(x.s, y.s);
    ASSERT_EQ(x.s_next, y.s_next);
    ASSERT_EQ(x.r, y.r);
  }
}

TEST(IidSampler, StateMarginalMatchesPi) {
  Environment env = SmallEnv(5, 2, 3);
  SteadyState ss = SteadyStateQuantities(env);
  auto table = std::make_shared<const TransitionTable>(env.mrp);
  IidSampler sampler(table, ss.pi, 17);
  Vector counts = Vector::Zero(5);
  Matrix pairs = Matrix::Zero(5, 5);
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    DataTuple x = sampler.Next();
    counts(x.s) += 1;
    pairs(x.s, x.s_next) += 1;
    ASSERT_EQ(x.r, env.mrp.R(x.s));
  }
  EXPECT_LE((counts / draws - ss.pi).cwiseAbs().maxCoeff(), 1e-2);
  for (int s = 0; s < 5; ++s)
    for (int t = 0; t < 5; ++t)
      EXPECT_NEAR(pairs(s, t) / counts(s), env.mrp.P(s, t), 1e-2);
}

TEST(IidSampler, DoublyStochasticGivesUniformMarginal) {
  Environment env = FlipChain(0.2);
  SteadyState ss = SteadyStateQuantities(env);
  auto table = std::make_shared<const TransitionTable>(env.mrp);
  IidSampler sampler(table, ss.pi, 3);
  int zeros = 0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) zeros += sampler.Next().s == 0;
  EXPECT_NEAR(static_cast<double>(zeros) / draws, 0.5, 1e-2);
}

TEST(IidSampler, SameSeedSameStream) {
  Environment env = SmallEnv(10, 2, 1);
  SteadyState ss = SteadyStateQuantities(env);
  auto table = std::make_shared<const TransitionTable>(env.mrp);
  IidSampler a(table, ss.pi, 8), b(table, ss.pi, 8);
  for (int i = 0; i < 1000; ++i) {
    DataTuple x = a.Next(), y = b.Next();
    ASSERT_EQ(x.s, y.s);
    ASSERT_EQ(x.s_next, y.s_next);
  }
}

TEST(MixingTime, UniformKernelMixesInOneStep) {
  Mrp mrp;
  mrp.P = Matrix::Constant(4, 4, 0.25);
  mrp.R = Vector::Zero(4);
  Vector pi = Vector::Constant(4, 0.25);
  EXPECT_EQ(MixingTime(mrp, pi, 1e-6), 1);
}

TEST(MixingTime, TwoStateGeometricDecay) {
  Mrp mrp;
  mrp.P = Matrix(2, 2);
  mrp.P << 0.9, 0.1, 0.1, 0.9;
  mrp.R = Vector::Zero(2);
  mrp.gamma = 0.5;
  Vector pi = Vector::Constant(2, 0.5);
  const double c = MixingAmplification(0.5);
  const int expected =
      static_cast<int>(std::ceil(std::log(0.01 / c) / std::log(0.8)));
  EXPECT_EQ(MixingTime(mrp, pi, 0.01), expected);
}

TEST(MixingTime, HalvingEpsAddsBoundedSteps) {
  Environment env = SmallEnv(30, 3, 12);
  SteadyState ss = SteadyStateQuantities(env);
  Eigen::EigenSolver<Matrix> eig(env.mrp.P);
  std::vector<double> mags;
  for (int i = 0; i < env.n(); ++i) mags.push_back(std::abs(eig.eigenvalues()(i)));
  std::sort(mags.rbegin(), mags.rend());
  const double lambda2 = mags[1];
  const int bump = static_cast<int>(std::ceil(std::log(2.0) / std::log(1.0 / lambda2)));
  int prev = MixingTime(env.mrp, ss.pi, 0.1);
  for (double eps = 0.05; eps > 1e-6; eps /= 2) {
    int tau = MixingTime(env.mrp, ss.pi, eps);
    EXPECT_GE(tau, prev);
    EXPECT_LE(tau - prev, bump + 1);
    prev = tau;
  }
}

TEST(MixingTime, CapAndBadEpsThrow) {
  Mrp mrp;
  mrp.P = Matrix(2, 2);
  mrp.P << 0.999, 0.001, 0.001, 0.999;
  mrp.R = Vector::Zero(2);
  Vector pi = Vector::Constant(2, 0.5);
  EXPECT_THROW(MixingTime(mrp, pi, 1e-6, 10), ConvergenceError);
  EXPECT_THROW(MixingTime(mrp, pi, 0.0), InvalidArgument);
}

}  // namespace
}  // namespace efsa
