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

#include "efsa/env_model.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace efsa {
namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kRankTol = 1e-10;
constexpr int kMaxFeatureRedraws = 64;

RowMatrix DrawFeatures(int n, int K, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix phi(n, K);
  for (int s = 0; s < n; ++s)
    for (int k = 0; k < K; ++k) phi(s, k) = normal(rng);
  const double max_norm = phi.rowwise().norm().maxCoeff();
  if (max_norm > 0) phi /= max_norm;
  return phi;
}

double SmallestSingularValue(const RowMatrix& phi) {
  Eigen::JacobiSVD<Matrix> svd{Matrix(phi)};
  return svd.singularValues().minCoeff();
}

}  // namespace

Environment BuildRandomMrp(const EnvironmentParams& p) {
  if (p.n < 2) throw InvalidArgument("n must be at least 2");
  if (p.K < 1 || p.K >= p.n)
    throw InvalidArgument("K must satisfy 1 <= K < n (got K=" +
                          std::to_string(p.K) + ", n=" + std::to_string(p.n) +
                          ")");
  if (!(p.gamma > 0.0 && p.gamma < 1.0))
    throw InvalidArgument("gamma must lie in (0, 1)");
  if (!(p.mixing_eps >= 0.0 && p.mixing_eps < 1.0))
    throw InvalidArgument("mixing_eps must lie in [0, 1)");
  if (p.reward_range.lo > p.reward_range.hi)
    throw InvalidArgument("reward_range lower bound exceeds upper bound");

  Environment env;
  env.seed = p.seed;
  env.mixing_eps = p.mixing_eps;
  env.reward_range = p.reward_range;
  env.mrp.gamma = p.gamma;

  Rng rng(DeriveSeed(p.seed, Stream::kEnvironment, 0));
  const int n = p.n;
  env.mrp.P.resize(n, n);
  const double uniform = 1.0 / n;
  for (int s = 0; s < n; ++s) {
    // Dirichlet(1, ..., 1) via normalized unit exponentials.
    double total = 0.0;
    for (int t = 0; t < n; ++t) {
      double x = -std::log1p(-Uniform01(rng));
      env.mrp.P(s, t) = x;
      total += x;
    }
    for (int t = 0; t < n; ++t) {
      env.mrp.P(s, t) =
          (1.0 - p.mixing_eps) * (env.mrp.P(s, t) / total) + p.mixing_eps * uniform;
    }
  }
  env.mrp.R.resize(n);
  const double width = p.reward_range.hi - p.reward_range.lo;
  for (int s = 0; s < n; ++s)
    env.mrp.R(s) = p.reward_range.lo + width * Uniform01(rng);

  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxFeatureRedraws)
      throw ConvergenceError("could not draw a full-rank feature matrix");
    RowMatrix phi =
        DrawFeatures(n, p.K, DeriveSeed(p.seed, Stream::kFeatures, attempt));
    if (SmallestSingularValue(phi) > kRankTol) {
      env.features.phi = std::move(phi);
      break;
    }
  }
  return env;
}

void ValidateEnvironment(const Environment& env) {
  const int n = env.n();
  if (n < 2) throw InvalidArgument("environment needs at least 2 states");
  if (env.mrp.P.rows() != n || env.mrp.P.cols() != n)
    throw InvalidArgument("P must be n x n");
  if (env.features.phi.rows() != n)
    throw InvalidArgument("Phi must have one row per state");
  if (env.K() < 1 || env.K() >= n)
    throw InvalidArgument("K must satisfy 1 <= K < n");
  if (!(env.gamma() > 0.0 && env.gamma() < 1.0))
    throw InvalidArgument("gamma must lie in (0, 1)");
  if (!env.mrp.P.allFinite() || !env.mrp.R.allFinite() ||
      !env.features.phi.allFinite())
    throw InvalidArgument("environment contains non-finite values");
  for (int s = 0; s < n; ++s) {
    if (env.mrp.P.row(s).minCoeff() < 0.0)
      throw InvalidArgument("P has a negative entry in row " + std::to_string(s));
    if (std::abs(env.mrp.P.row(s).sum() - 1.0) > kStochasticTol)
      throw InvalidArgument("row " + std::to_string(s) + " of P does not sum to 1");
    const double r = env.mrp.R(s);
    if (r < env.reward_range.lo || r > env.reward_range.hi)
      throw InvalidArgument("reward of state " + std::to_string(s) +
                            " lies outside reward_range");
    if (env.features.row(s).norm() > 1.0 + kStochasticTol)
      throw InvalidArgument("feature row " + std::to_string(s) +
                            " has norm greater than 1");
  }
  if (SmallestSingularValue(env.features.phi) <= kRankTol)
    throw InvalidArgument("feature matrix is rank deficient");
}

Vector StationaryDistribution(const Mrp& mrp, double tol, int max_iter) {
  const int n = mrp.n();
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  Eigen::RowVectorXd next(n);
  for (int it = 0; it < max_iter; ++it) {
    next.noalias() = pi * mrp.P;
    const double residual = (next - pi).lpNorm<1>();
    pi = next / next.sum();
    if (residual <= tol) {
      // One more check on the renormalized vector.
      if ((pi * mrp.P - pi).lpNorm<1>() <= tol) return pi.transpose();
    }
  }
  throw ConvergenceError("power iteration did not converge within " +
                         std::to_string(max_iter) +
                         " iterations; the chain may be (nearly) periodic");
}

SteadyState SteadyStateQuantities(const Mrp& mrp, const FeatureMap& features) {
  const int n = mrp.n();
  const int K = features.K();
  SteadyState ss;
  ss.pi = StationaryDistribution(mrp);

  const Matrix phi = features.phi;
  const Matrix d_phi = ss.pi.asDiagonal() * phi;  // D Phi
  ss.Sigma = phi.transpose() * d_phi;
  ss.Sigma = 0.5 * (ss.Sigma + ss.Sigma.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(ss.Sigma, Eigen::EigenvaluesOnly);
  ss.omega = eig.eigenvalues().minCoeff();

  const Matrix gamma_p_minus_i =
      mrp.gamma * mrp.P - Matrix::Identity(n, n);
  ss.Abar = d_phi.transpose() * gamma_p_minus_i * phi;
  ss.bbar = -(d_phi.transpose() * mrp.R);

  Eigen::FullPivLU<Matrix> lu(ss.Abar);
  if (lu.rank() < K)
    throw InvalidArgument("steady-state matrix Abar is singular");
  ss.theta_star = lu.solve(ss.bbar);

  // sigma^2 = sum_s pi(s) ||phi(s)||^2 sum_s' P(s,s') (R(s) + gamma v(s') - v(s))^2
  const Vector v = phi * ss.theta_star;
  double sigma_sq = 0.0;
  for (int s = 0; s < n; ++s) {
    double inner = 0.0;
    for (int t = 0; t < n; ++t) {
      const double td = mrp.R(s) + mrp.gamma * v(t) - v(s);
      inner += mrp.P(s, t) * td * td;
    }
    sigma_sq += ss.pi(s) * features.row(s).squaredNorm() * inner;
  }
  ss.sigma_sq = sigma_sq;
  return ss;
}

Vector MeanPathDirection(const SteadyState& ss, const Vector& theta) {
  return ss.Abar * theta - ss.bbar;
}

void SampleTdDirection(const DataTuple& x, const FeatureMap& features,
                       double gamma, const Vector& theta, Vector& out) {
  const auto phi_s = features.row(x.s);
  const double td = x.r + gamma * features.row(x.s_next).dot(theta) -
                    phi_s.dot(theta);
  out = td * phi_s.transpose();
}

Vector SampleTdDirection(const DataTuple& x, const FeatureMap& features,
                         double gamma, const Vector& theta) {
  Vector out(features.K());
  SampleTdDirection(x, features, gamma, theta, out);
  return out;
}

double DNormSq(const SteadyState& ss, const Vector& theta1,
               const Vector& theta2) {
  const Vector d = theta1 - theta2;
  return d.dot(ss.Sigma * d);
}

TransitionTable::TransitionTable(const Mrp& mrp)
    : n_(mrp.n()),
      cumulative_(static_cast<std::size_t>(n_) * n_),
      rewards_(mrp.R.data(), mrp.R.data() + n_) {
  for (int s = 0; s < n_; ++s) {
    double acc = 0.0;
    for (int t = 0; t < n_; ++t) {
      acc += mrp.P(s, t);
      cumulative_[static_cast<std::size_t>(s) * n_ + t] = acc;
    }
    cumulative_[static_cast<std::size_t>(s) * n_ + n_ - 1] = 1.0;
  }
}

int TransitionTable::SampleNext(int s, double u) const {
  const auto first = cumulative_.begin() + static_cast<std::ptrdiff_t>(s) * n_;
  const auto it = std::upper_bound(first, first + n_, u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - first, n_ - 1));
}

MarkovSampler::MarkovSampler(std::shared_ptr<const TransitionTable> table,
                             std::uint64_t seed)
    : table_(std::move(table)), rng_(seed) {
  state_ = std::min(static_cast<int>(Uniform01(rng_) * table_->n()),
                    table_->n() - 1);
}

DataTuple MarkovSampler::Next() {
  DataTuple x;
  x.s = state_;
  x.s_next = table_->SampleNext(state_, Uniform01(rng_));
  x.r = table_->reward(state_);
  state_ = x.s_next;
  return x;
}

IidSampler::IidSampler(std::shared_ptr<const TransitionTable> table,
                       const Vector& pi, std::uint64_t seed)
    : table_(std::move(table)), pi_cumulative_(pi.size()), rng_(seed) {
  double acc = 0.0;
  for (Eigen::Index s = 0; s < pi.size(); ++s) {
    acc += pi(s);
    pi_cumulative_[s] = acc;
  }
  pi_cumulative_.back() = 1.0;
}

DataTuple IidSampler::Next() {
  const double u = Uniform01(rng_);
  const auto it =
      std::upper_bound(pi_cumulative_.begin(), pi_cumulative_.end(), u);
  DataTuple x;
  x.s = static_cast<int>(std::min<std::ptrdiff_t>(
      it - pi_cumulative_.begin(),
      static_cast<std::ptrdiff_t>(pi_cumulative_.size()) - 1));
  x.s_next = table_->SampleNext(x.s, Uniform01(rng_));
  x.r = table_->reward(x.s);
  return x;
}

int MixingTime(const Mrp& mrp, const Vector& pi, double eps, int cap) {
  if (!(eps > 0.0)) throw InvalidArgument("mixing precision must be positive");
  const double threshold = eps / MixingAmplification(mrp.gamma);
  const Eigen::RowVectorXd pi_row = pi.transpose();
  Matrix power = mrp.P;
  for (int t = 1; t <= cap; ++t) {
    double worst = 0.0;
    for (int s = 0; s < mrp.n(); ++s)
      worst = std::max(worst, (power.row(s) - pi_row).lpNorm<1>());
    if (worst <= threshold) return t;
    power = power * mrp.P;
  }
  throw ConvergenceError("mixing time exceeds cap of " + std::to_string(cap) +
                         " steps at eps=" + std::to_string(eps));
}

}  // namespace efsa
