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

#include "efsa/analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "efsa/ef_td.h"

namespace efsa {

double LyapunovPsi(const Vector& theta, const Vector& e, double alpha,
                   const Vector& theta_star) {
  return (theta + alpha * e - theta_star).squaredNorm() +
         alpha * alpha * e.squaredNorm();
}

double LyapunovXi(const Vector& theta, std::span<const Vector> memories,
                  double alpha, double delta, double gamma,
                  const Vector& theta_star) {
  if (memories.empty()) throw InvalidArgument("Xi needs at least one agent");
  Vector e_bar = Vector::Zero(theta.size());
  double energy = 0.0;
  for (const Vector& e : memories) {
    e_bar += e;
    energy += e.squaredNorm();
  }
  const double M = static_cast<double>(memories.size());
  e_bar /= M;
  energy /= M;
  return (theta + alpha * e_bar - theta_star).squaredNorm() +
         XiMemoryWeight(delta, gamma) * alpha * alpha * alpha * energy;
}

double BoundEnvelope::operator()(std::int64_t t) const {
  const double one_minus_gamma = 1.0 - gamma;
  const double T = static_cast<double>(t);
  switch (theorem) {
    case Theorem::kMeanPath:
    case Theorem::kIid: {
      const double c = rate_constant > 0.0
                           ? rate_constant
                           : (theorem == Theorem::kMeanPath ? 1024.0 : 2048.0);
      const double rate = 1.0 - one_minus_gamma * one_minus_gamma * omega / (c * delta);
      double value = 2.0 * std::pow(rate, T) * initial_error;
      if (theorem == Theorem::kIid) value += big_o * sigma_sq / omega;
      return value;
    }
    case Theorem::kMarkov:
    case Theorem::kNonlinear: {
      const double c1 = big_o * (alpha * alpha * delta * delta * G * G + G * G);
      const double curvature =
          theorem == Theorem::kMarkov ? omega * one_minus_gamma : beta;
      const double rate = 1.0 - alpha * curvature;
      const double residual =
          big_o * alpha * tau * delta * delta * G * G / curvature;
      const double elapsed = std::max(0.0, T - tau);
      return c1 * std::pow(rate, elapsed) + residual;
    }
    case Theorem::kMultiAgent: {
      // Averaging-lemma exponent A/E = omega (1-gamma)^2 / (896 delta).
      const double c = rate_constant > 0.0 ? rate_constant : 896.0;
      const double g2 = one_minus_gamma * one_minus_gamma;
      const double transient = big_o * initial_error * delta / g2 *
                               std::exp(-omega * g2 * T / (c * delta));
      const double dominant = big_o * sigma_sq / (omega * g2 * M * (T + 1.0));
      const double higher = big_o * delta * delta * sigma_sq /
                            (omega * omega * g2 * g2 * (T + 1.0) * (T + 1.0));
      return transient + dominant + higher;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> TheoremEnvelope(const BoundEnvelope& env,
                                    std::span<const std::int64_t> ts) {
  std::vector<double> out;
  out.reserve(ts.size());
  for (std::int64_t t : ts) out.push_back(env(t));
  return out;
}

bool LemmaReport::all_pass() const {
  return std::all_of(results.begin(), results.end(),
                     [](const LemmaResult& r) { return r.pass; });
}

double ExpectedDirectionNormSq(const Environment& env, const SteadyState& ss,
                               const Vector& theta) {
  const Vector v = env.features.phi * theta;
  const int n = env.n();
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    double inner = 0.0;
    for (int t = 0; t < n; ++t) {
      const double td = env.mrp.R(s) + env.gamma() * v(t) - v(s);
      inner += env.mrp.P(s, t) * td * td;
    }
    total += ss.pi(s) * env.features.row(s).squaredNorm() * inner;
  }
  return total;
}

namespace {

// Tracks the worst normalized margin of one inequality.
class MarginTracker {
 public:
  MarginTracker(std::string id, std::string description, double slack)
      : slack_(slack) {
    result_.id = std::move(id);
    result_.description = std::move(description);
    result_.worst_margin = std::numeric_limits<double>::infinity();
  }

  void Observe(double margin, const Vector& witness) {
    ++result_.trials;
    if (margin < result_.worst_margin || std::isnan(margin)) {
      result_.worst_margin = margin;
      result_.witness = witness;
    }
  }

  LemmaResult Finish() {
    result_.pass = result_.trials > 0 && result_.worst_margin >= -slack_;
    return std::move(result_);
  }

 private:
  double slack_;
  LemmaResult result_;
};

Vector RandomDirection(Rng& rng, int K) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector d(K);
  for (int i = 0; i < K; ++i) d(i) = normal(rng);
  return d * std::pow(10.0, 3.0 * Uniform01(rng) - 2.0);
}

std::vector<CompressorSpec> CompliantSpecs(int K) {
  std::vector<CompressorSpec> specs{CompressorSpec::Identity(K),
                                    CompressorSpec::TopK(1, K)};
  if (K > 2) specs.push_back(CompressorSpec::TopK(K / 2, K));
  specs.push_back(CompressorSpec::TopK(K, K));
  specs.push_back(CompressorSpec::ScaledSign(K));
  return specs;
}

}  // namespace

LemmaReport VerifyAllLemmas(const Environment& env, const SteadyState& ss,
                            const LemmaSuiteOptions& opt) {
  const int K = env.K();
  const int n = env.n();
  const double gamma = env.gamma();
  const Vector& theta_star = ss.theta_star;
  LemmaReport report;

  // Structural facts about the steady-state matrices.
  {
    MarginTracker ata("STRUCT-AtA", "lambda_min(Sigma - Abar^T Abar) >= 0",
                      opt.slack);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(
        ss.Sigma - ss.Abar.transpose() * ss.Abar, Eigen::EigenvaluesOnly);
    ata.Observe(eig.eigenvalues().minCoeff(), Vector::Zero(K));
    report.results.push_back(ata.Finish());

    MarginTracker nd("STRUCT-negdef", "lambda_max(Abar + Abar^T) < 0", 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> sym(ss.Abar + ss.Abar.transpose(),
                                              Eigen::EigenvaluesOnly);
    // Strict inequality: require a strictly positive margin.
    const double margin = -sym.eigenvalues().maxCoeff();
    nd.Observe(margin > 0.0 ? margin : -1.0, Vector::Zero(K));
    report.results.push_back(nd.Finish());
  }

  Rng rng(DeriveSeed(opt.seed, Stream::kChecker, 1));
  Eigen::SelfAdjointEigenSolver<Matrix> sigma_eig(ss.Sigma);
  const Vector slow_direction = sigma_eig.eigenvectors().col(0);
  Eigen::JacobiSVD<Matrix> abar_svd(ss.Abar, Eigen::ComputeFullV);
  const Vector stiff_direction = abar_svd.matrixV().col(0);
  const double sqrt_omega = std::sqrt(std::max(ss.omega, 0.0));

  MarginTracker l1_lo("L1-lower", "sqrt(omega)|d| <= |Phi d|_D", opt.slack);
  MarginTracker l1_hi("L1-upper", "|Phi d|_D <= |d|", opt.slack);
  MarginTracker l2("L2", "<theta*-theta, gbar> >= (1-gamma)|V-V*|_D^2",
                   opt.slack);
  MarginTracker l3("L3", "|gbar(theta)| <= 2|V-V*|_D", opt.slack);
  MarginTracker l4("L4", "E|g(theta)|^2 <= 2 sigma^2 + 8|V-V*|_D^2", opt.slack);
  MarginTracker l5("L5", "|gbar(t1)-gbar(t2)| <= |t1-t2|", opt.slack);
  MarginTracker l6("L6", "|g(X,t1)-g(X,t2)| <= 2|t1-t2|", opt.slack);

  // Exact enumeration costs n^2 per call; cap the total work.
  const std::int64_t l4_budget = std::max<std::int64_t>(1, 100000000 / (n * n));
  const int l4_stride = static_cast<int>(
      std::max<std::int64_t>(1, (opt.trials + l4_budget - 1) / l4_budget));
  for (int trial = 0; trial < opt.trials; ++trial) {
    Vector d = RandomDirection(rng, K);
    // Every 8th trial probes the extremal directions of Sigma / Abar.
    if (trial % 8 == 1) d = slow_direction * d.norm();
    if (trial % 8 == 2) d = stiff_direction * d.norm();
    const double dn = d.norm();
    const double dn2 = dn * dn;
    const Vector theta = theta_star + d;

    const double dnorm_sq = d.dot(ss.Sigma * d);
    const double dnorm = std::sqrt(std::max(dnorm_sq, 0.0));
    l1_lo.Observe((dnorm - sqrt_omega * dn) / dn, d);
    l1_hi.Observe((dn - dnorm) / dn, d);

    const Vector gbar = MeanPathDirection(ss, theta);
    l2.Observe(((-d).dot(gbar) - (1.0 - gamma) * dnorm_sq) / dn2, d);
    l3.Observe((2.0 * dnorm - gbar.norm()) / dn, d);

    if (trial % l4_stride == 0) {
      const double lhs = ExpectedDirectionNormSq(env, ss, theta);
      const double rhs = 2.0 * ss.sigma_sq + 8.0 * dnorm_sq;
      l4.Observe((rhs - lhs) / std::max(1.0, rhs), d);
    }

    // Lipschitz checks on the pair (theta, theta + u).
    Vector u = RandomDirection(rng, K);
    if (trial % 8 == 3) u = stiff_direction * u.norm();
    const double un = u.norm();
    const Vector gbar2 = MeanPathDirection(ss, theta + u);
    l5.Observe((un - (gbar2 - gbar).norm()) / un, u);

    DataTuple x;
    x.s = std::min(static_cast<int>(Uniform01(rng) * n), n - 1);
    x.s_next = std::min(static_cast<int>(Uniform01(rng) * n), n - 1);
    x.r = env.mrp.R(x.s);
    if (trial % 2 == 1) {
      // Worst direction for this tuple: along gamma phi(s') - phi(s).
      Vector w = gamma * env.features.row(x.s_next).transpose() -
                 env.features.row(x.s).transpose();
      if (w.norm() > 0) u = w * (un / w.norm());
    }
    const Vector g1 = SampleTdDirection(x, env.features, gamma, theta);
    const Vector g2 = SampleTdDirection(x, env.features, gamma, theta + u);
    l6.Observe((2.0 * un - (g2 - g1).norm()) / un, u);
  }
  // The most stretched feature rows are the likeliest direction-bound violators.
  {
    Eigen::Index worst_row = 0;
    env.features.phi.rowwise().norm().maxCoeff(&worst_row);
    const int s = static_cast<int>(worst_row);
    for (int t = 0; t < n; ++t) {
      Vector w = gamma * env.features.row(t).transpose() -
                 env.features.row(s).transpose();
      if (w.norm() == 0) continue;
      DataTuple x{s, t, env.mrp.R(s)};
      const Vector g1 = SampleTdDirection(x, env.features, gamma, theta_star);
      const Vector g2 = SampleTdDirection(x, env.features, gamma, theta_star + w);
      l6.Observe((2.0 * w.norm() - (g2 - g1).norm()) / w.norm(), w);
    }
  }
  for (auto* m : {&l1_lo, &l1_hi, &l2, &l3, &l4, &l5, &l6})
    report.results.push_back(m->Finish());

  // Compressor properties: memory contraction, contraction, acute angle.
  for (const CompressorSpec& spec : CompliantSpecs(K)) {
    const double delta = RequireDelta(spec);
    const std::string tag = "[" + spec.ToString() + "]";
    Compressor q(spec);
    MarginTracker l7("L7" + tag,
                     "|e'|^2 <= (1-1/2delta)|e|^2 + 2delta|g|^2", opt.slack);
    MarginTracker acute("ACUTE" + tag, "<Q(x),x> >= |x|^2/(2delta)", opt.slack);
    for (int trial = 0; trial < opt.trials; ++trial) {
      const Vector e = RandomDirection(rng, K);
      Vector g = RandomDirection(rng, K);
      if (trial % 4 == 1) g = -e;  // cancellation
      if (trial % 4 == 2) g = Vector::Unit(K, trial % K) * g.norm();
      const Vector v = e + g;
      const Vector e_next = v - q(v);
      const double scale = e.squaredNorm() + g.squaredNorm();
      l7.Observe(((1.0 - 1.0 / (2.0 * delta)) * e.squaredNorm() +
                  2.0 * delta * g.squaredNorm() - e_next.squaredNorm()) /
                     scale,
                 v);
      Vector x = RandomDirection(rng, K);
      if (trial % 4 == 3) x = Vector::Unit(K, trial % K) * x.norm();
      if (trial % 16 == 5) x = Vector::Ones(K) * x.norm();
      acute.Observe((q(x).dot(x) - x.squaredNorm() / (2.0 * delta)) /
                        x.squaredNorm(),
                    x);
    }
    ContractionReport c = VerifyContraction(spec, opt.trials, opt.seed);
    LemmaResult eq5;
    eq5.id = "EQ5" + tag;
    eq5.description = "|Q(x)-x|^2 <= (1-1/delta)|x|^2";
    eq5.trials = opt.trials + K + 2;
    eq5.worst_margin = c.bound - c.max_ratio;
    eq5.pass = c.pass;
    eq5.witness = c.witness;
    report.results.push_back(std::move(eq5));
    report.results.push_back(l7.Finish());
    report.results.push_back(acute.Finish());
  }

  // Uniform bounds along projected Markov EF-TD (needs |R| <= 1, G >= 1).
  if (opt.uniform_bound_steps > 0) {
    const bool rewards_ok = env.mrp.R.cwiseAbs().maxCoeff() <= 1.0;
    const double G = DefaultProjectionRadius(theta_star);
    for (const CompressorSpec& spec :
         {CompressorSpec::TopK(1, K), CompressorSpec::ScaledSign(K)}) {
      const std::string tag = "[" + spec.ToString() + "]";
      MarginTracker e_bound("L8a" + tag, "|e_t| <= 6 delta G", opt.slack);
      MarginTracker h_bound("L8b" + tag, "|h_t| <= 15 delta G", opt.slack);
      MarginTracker p_bound("L8c" + tag, "|e_pt| <= 15 alpha delta G", opt.slack);
      if (rewards_ok) {
        const double delta = RequireDelta(spec);
        RunSpec run;
        run.algorithm = Algorithm::kEfTd;
        run.sampler = SamplerKind::kMarkov;
        run.compressor = spec;
        run.alpha = TheoremDefaultAlpha(SamplerKind::kMarkov, gamma, delta);
        run.T = opt.uniform_bound_steps;
        run.record_every = opt.uniform_bound_steps;
        run.projection = {true, G};
        run.seed = DeriveSeed(opt.seed, Stream::kChecker, 2);
        const double dg = delta * G;
        RunSingleAgent(env, ss, run,
                       [&](const AgentState&, const AgentState& s) {
                         e_bound.Observe((6.0 * dg - s.e.norm()) / dg, s.e);
                         h_bound.Observe((15.0 * dg - s.h.norm()) / dg, s.h);
                         p_bound.Observe(
                             (15.0 * run.alpha * dg - s.e_proj.norm()) /
                                 (run.alpha * dg),
                             s.e_proj);
                       });
      }
      for (auto* m : {&e_bound, &h_bound, &p_bound}) {
        LemmaResult r = m->Finish();
        if (!rewards_ok) {
          r.description += " (skipped: rewards exceed 1)";
          r.pass = true;
          r.worst_margin = 0.0;
        }
        report.results.push_back(std::move(r));
      }
    }
  }
  return report;
}

RateEstimate FitRateAndPlateau(std::span<const std::int64_t> t,
                               std::span<const double> values) {
  if (t.size() != values.size())
    throw InvalidArgument("time and value series differ in length");
  if (values.size() < 100)
    throw InvalidArgument("rate fit needs at least 100 records");
  for (double v : values)
    if (!std::isfinite(v)) throw DivergenceError("cannot fit a diverged series");

  RateEstimate est;
  const std::size_t n = values.size();
  const std::size_t tail = std::max<std::size_t>(1, (n + 9) / 10);
  double sum = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) sum += values[i];
  est.plateau = sum / static_cast<double>(tail);

  const double threshold = 10.0 * est.plateau;
  std::size_t end = 0;
  while (end < n && values[end] > 0.0 && values[end] >= threshold) ++end;
  est.fit_begin = 0;
  est.fit_end = end;
  if (end < 2) {
    est.geometric_rate = 1.0;
    return est;
  }
  double mean_t = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < end; ++i) {
    mean_t += static_cast<double>(t[i]);
    mean_y += std::log(values[i]);
  }
  mean_t /= static_cast<double>(end);
  mean_y /= static_cast<double>(end);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < end; ++i) {
    const double dt = static_cast<double>(t[i]) - mean_t;
    sxy += dt * (std::log(values[i]) - mean_y);
    sxx += dt * dt;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  est.geometric_rate = std::clamp(std::exp(slope), 0.0, 1.0);
  if (est.geometric_rate <= 0.0) est.geometric_rate = std::numeric_limits<double>::min();
  return est;
}

RateEstimate FitRateAndPlateau(const Trace& trace) {
  if (trace.diverged) throw DivergenceError("cannot fit a diverged trace");
  std::vector<std::int64_t> t;
  std::vector<double> e;
  t.reserve(trace.records.size());
  e.reserve(trace.records.size());
  for (const TraceRecord& r : trace.records) {
    t.push_back(r.t);
    e.push_back(r.E);
  }
  return FitRateAndPlateau(t, e);
}

const std::vector<double>& AggregateTrace::Mean(const std::string& column) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == column) return mean[i];
  throw InvalidArgument("no aggregate column named " + column);
}

AggregateTrace Aggregate(std::span<const Trace> traces) {
  if (traces.empty()) throw InvalidArgument("nothing to aggregate");
  AggregateTrace agg;
  agg.trials = static_cast<int>(traces.size());
  std::vector<const Trace*> used;
  for (const Trace& tr : traces) {
    if (tr.diverged) ++agg.diverged;
    else used.push_back(&tr);
  }
  std::size_t length = std::numeric_limits<std::size_t>::max();
  if (used.empty()) {
    // Everything diverged: keep the common prefix before the final record.
    for (const Trace& tr : traces) {
      used.push_back(&tr);
      length = std::min(length, tr.records.empty() ? 0 : tr.records.size() - 1);
    }
  } else {
    for (const Trace* tr : used) length = std::min(length, tr->records.size());
  }

  const bool multi = traces.front().multi_agent;
  using Getter = double (*)(const TraceRecord&);
  std::vector<std::pair<std::string, Getter>> cols = {
      {"E", [](const TraceRecord& r) { return r.E; }},
      {"Dnorm", [](const TraceRecord& r) { return r.dnorm; }},
      {"psi", [](const TraceRecord& r) { return r.psi; }},
      {"e_norm", [](const TraceRecord& r) { return r.e_norm; }},
      {"h_norm", [](const TraceRecord& r) { return r.h_norm; }},
      {"eproj_norm", [](const TraceRecord& r) { return r.eproj_norm; }},
      {"bits", [](const TraceRecord& r) { return static_cast<double>(r.bits); }},
  };
  if (multi) {
    cols.push_back({"M", [](const TraceRecord& r) { return static_cast<double>(r.M); }});
    cols.push_back({"Ebar", [](const TraceRecord& r) { return r.ebar; }});
    cols.push_back({"uplink_bits_cum", [](const TraceRecord& r) {
                      return static_cast<double>(r.uplink_bits_cum);
                    }});
    cols.push_back({"dnorm_avg_iterate",
                    [](const TraceRecord& r) { return r.dnorm_avg_iterate; }});
  }
  for (std::size_t i = 0; i < length; ++i) agg.t.push_back(used.front()->records[i].t);
  const double count = static_cast<double>(used.size());
  for (const auto& [name, get] : cols) {
    agg.columns.push_back(name);
    std::vector<double> mean(length), sd(length);
    for (std::size_t i = 0; i < length; ++i) {
      double m = 0.0;
      for (const Trace* tr : used) m += get(tr->records[i]);
      m /= count;
      double var = 0.0;
      for (const Trace* tr : used) {
        const double d = get(tr->records[i]) - m;
        var += d * d;
      }
      mean[i] = m;
      sd[i] = used.size() > 1 ? std::sqrt(var / (count - 1.0)) : 0.0;
    }
    agg.mean.push_back(std::move(mean));
    agg.std.push_back(std::move(sd));
  }
  return agg;
}

}  // namespace efsa
