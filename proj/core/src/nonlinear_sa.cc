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

#include "efsa/nonlinear_sa.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "efsa/analysis.h"

namespace efsa {
namespace {

// Root of x -> sum_s w_s f(x - b_s) for the decreasing f(z) = -z - tanh(z)/2.
double SolveCoordinate(const Vector& weights, const Vector& offsets) {
  auto f = [&](double x) {
    double acc = 0.0;
    for (Eigen::Index s = 0; s < offsets.size(); ++s) {
      const double z = x - offsets(s);
      acc += weights(s) * (-z - 0.5 * std::tanh(z));
    }
    return acc;
  };
  double lo = offsets.minCoeff() - 1.0;
  double hi = offsets.maxCoeff() + 1.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return std::abs(f(lo)) < std::abs(f(hi)) ? lo : hi;
}

Vector RandomVector(Rng& rng, int K, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(K);
  for (int i = 0; i < K; ++i) v(i) = normal(rng);
  return v * scale;
}

}  // namespace

UpdateMap TdUpdateMap(const Environment& env, const SteadyState& ss) {
  UpdateMap map;
  map.name = "td";
  map.K = env.K();
  const FeatureMap* features = &env.features;
  const double gamma = env.gamma();
  map.eval = [features, gamma](const DataTuple& x, const Vector& theta,
                               Vector& out) {
    SampleTdDirection(x, *features, gamma, theta, out);
  };
  const SteadyState* s = &ss;
  map.mean_eval = [s](const Vector& theta) { return MeanPathDirection(*s, theta); };
  map.L = 2.0;
  map.beta = ss.omega * (1.0 - gamma);
  map.theta_star = ss.theta_star;
  return map;
}

UpdateMap SyntheticUpdateMap(const Environment& env, const SteadyState& ss,
                             std::uint64_t seed) {
  const int n = env.n();
  const int K = env.K();
  Rng rng(DeriveSeed(seed, Stream::kEnvironment, 17));
  auto offsets = std::make_shared<RowMatrix>(n, K);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int s = 0; s < n; ++s)
    for (int j = 0; j < K; ++j) (*offsets)(s, j) = normal(rng);

  UpdateMap map;
  map.name = "synthetic";
  map.K = K;
  map.eval = [offsets](const DataTuple& x, const Vector& theta, Vector& out) {
    out.resize(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      const double z = theta(j) - (*offsets)(x.s, j);
      out(j) = -z - 0.5 * std::tanh(z);
    }
  };
  auto pi = std::make_shared<Vector>(ss.pi);
  map.mean_eval = [offsets, pi](const Vector& theta) {
    Vector out = Vector::Zero(theta.size());
    for (Eigen::Index s = 0; s < offsets->rows(); ++s) {
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double z = theta(j) - (*offsets)(s, j);
        out(j) += (*pi)(s) * (-z - 0.5 * std::tanh(z));
      }
    }
    return out;
  };
  map.L = 1.5;
  map.beta = 1.0;
  map.theta_star.resize(K);
  for (int j = 0; j < K; ++j)
    map.theta_star(j) = SolveCoordinate(ss.pi, offsets->col(j));
  return map;
}

Vector EnumeratedMean(const UpdateMap& map, const Environment& env,
                      const SteadyState& ss, const Vector& theta) {
  Vector acc = Vector::Zero(theta.size());
  Vector g(theta.size());
  for (int s = 0; s < env.n(); ++s) {
    for (int t = 0; t < env.n(); ++t) {
      const double w = ss.pi(s) * env.mrp.P(s, t);
      if (w == 0.0) continue;
      map.eval(DataTuple{s, t, env.mrp.R(s)}, theta, g);
      acc += w * g;
    }
  }
  return acc;
}

void EfSaStep(AgentState& state, const DataTuple& x, const UpdateMap& map,
              double alpha, Compressor& q, const ProjectionSpec& proj) {
  ErrorFeedbackStep(state, x, map.eval, alpha, q, proj);
}

Trace RunEfSa(const Environment& env, const SteadyState& ss,
              const UpdateMap& map, const RunSpec& spec, const StepHook& hook) {
  if (spec.algorithm == Algorithm::kMultiAgent)
    throw InvalidArgument("RunEfSa does not run multi_agent");
  if (!(spec.alpha * map.beta < 1.0))
    throw InvalidArgument("EF-SA requires alpha * beta < 1");
  if (spec.compressor.dim != map.K)
    throw InvalidArgument("compressor dimension does not match the map");

  TrajectoryInputs in;
  in.ss = &ss;
  in.theta_star = map.theta_star;
  auto table = std::make_shared<const TransitionTable>(env.mrp);
  std::unique_ptr<Sampler> sampler = MakeSampler(
      spec.sampler, table, ss.pi, DeriveSeed(spec.seed, Stream::kSampler, 0));
  in.sampler = sampler.get();
  if (spec.sampler == SamplerKind::kMeanPath) {
    auto mean = map.mean_eval;
    in.direction = [mean](const DataTuple&, const Vector& theta, Vector& out) {
      out = mean(theta);
    };
  } else {
    in.direction = map.eval;
  }
  return RunTrajectory(in, spec, hook);
}

LipschitzReport CheckLipschitz(const UpdateMap& map, const Environment& env,
                               int trials, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, Stream::kChecker, 3));
  const int n = env.n();
  const int K = map.K;
  LipschitzReport report;
  Vector g1(K), g2(K);
  for (int trial = 0; trial < trials; ++trial) {
    DataTuple x;
    x.s = std::min(static_cast<int>(Uniform01(rng) * n), n - 1);
    x.s_next = std::min(static_cast<int>(Uniform01(rng) * n), n - 1);
    x.r = env.mrp.R(x.s);
    const double scale = std::pow(10.0, 4.0 * Uniform01(rng) - 3.0);
    Vector theta1 = map.theta_star + RandomVector(rng, K, 3.0);
    Vector d = RandomVector(rng, K, scale);
    switch (trial % 4) {
      case 1:  // collinear with theta1
        d = theta1 * (scale / std::max(theta1.norm(), 1e-300));
        break;
      case 2: {  // along gamma phi(s') - phi(s), the stiffest TD direction
        Vector w = env.gamma() * env.features.row(x.s_next).transpose() -
                   env.features.row(x.s).transpose();
        if (w.norm() > 0.0) d = w * (scale / w.norm());
        break;
      }
      case 3:  // straddle the origin of the residual, where slopes peak
        theta1 = map.theta_star + RandomVector(rng, K, 1e-3);
        break;
      default:
        break;
    }
    if (d.norm() == 0.0) continue;
    const Vector theta2 = theta1 + d;
    map.eval(x, theta1, g1);
    map.eval(x, theta2, g2);
    report.max_ratio = std::max(report.max_ratio, (g1 - g2).norm() / d.norm());
  }
  report.pass = report.max_ratio <= map.L + 1e-9;
  return report;
}

MonotoneReport CheckMonotone(const UpdateMap& map, int trials,
                             std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, Stream::kChecker, 4));
  const int K = map.K;
  const Vector g_star = map.mean_eval(map.theta_star);
  MonotoneReport report;
  report.min_beta_observed = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < trials; ++trial) {
    const double scale = std::pow(10.0, 3.0 * Uniform01(rng) - 2.0);
    const Vector d = RandomVector(rng, K, scale);
    const double dn2 = d.squaredNorm();
    if (dn2 == 0.0) continue;
    const Vector diff = map.mean_eval(map.theta_star + d) - g_star;
    report.min_beta_observed =
        std::min(report.min_beta_observed, -d.dot(diff) / dn2);
  }
  report.pass = report.min_beta_observed >= map.beta - 1e-9;
  return report;
}

}  // namespace efsa
