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

#include "efsa/compression.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

namespace efsa {
namespace {

constexpr double kContractionSlack = 1e-12;

double Sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

int ParseCount(std::string_view text, std::string_view what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidArgument("bad " + std::string(what) + " count in compressor '" +
                          std::string(text) + "'");
  return value;
}

}  // namespace

CompressorSpec CompressorSpec::Identity(int dim) {
  return {CompressorKind::kIdentity, 0, dim};
}
CompressorSpec CompressorSpec::TopK(int k, int dim) {
  return {CompressorKind::kTopK, k, dim};
}
CompressorSpec CompressorSpec::ScaledSign(int dim) {
  return {CompressorKind::kScaledSign, 0, dim};
}
CompressorSpec CompressorSpec::RawSign(int dim) {
  return {CompressorKind::kRawSign, 0, dim};
}
CompressorSpec CompressorSpec::RandK(int k, int dim) {
  return {CompressorKind::kRandK, k, dim};
}

CompressorSpec CompressorSpec::Parse(std::string_view text, int dim) {
  CompressorSpec spec;
  if (text == "identity") {
    spec = Identity(dim);
  } else if (text == "signscaled") {
    spec = ScaledSign(dim);
  } else if (text == "signraw") {
    spec = RawSign(dim);
  } else if (text.starts_with("topk:")) {
    spec = TopK(ParseCount(text.substr(5), "topk"), dim);
  } else if (text.starts_with("randk:")) {
    spec = RandK(ParseCount(text.substr(6), "randk"), dim);
  } else {
    throw InvalidArgument("unknown compressor '" + std::string(text) +
                          "' (expected identity, topk:k, signscaled, signraw "
                          "or randk:k)");
  }
  ValidateSpec(spec);
  return spec;
}

std::string CompressorSpec::ToString() const {
  switch (kind) {
    case CompressorKind::kIdentity: return "identity";
    case CompressorKind::kTopK: return "topk:" + std::to_string(k);
    case CompressorKind::kScaledSign: return "signscaled";
    case CompressorKind::kRawSign: return "signraw";
    case CompressorKind::kRandK: return "randk:" + std::to_string(k);
  }
  return "?";
}

void ValidateSpec(const CompressorSpec& spec) {
  if (spec.dim < 1) throw InvalidArgument("compressor dimension must be >= 1");
  if (spec.kind == CompressorKind::kTopK || spec.kind == CompressorKind::kRandK) {
    if (spec.k < 1 || spec.k > spec.dim)
      throw InvalidArgument("compressor needs 1 <= k <= K (got k=" +
                            std::to_string(spec.k) +
                            ", K=" + std::to_string(spec.dim) + ")");
  }
}

std::optional<double> Delta(const CompressorSpec& spec) {
  switch (spec.kind) {
    case CompressorKind::kIdentity: return 1.0;
    case CompressorKind::kTopK:
    case CompressorKind::kRandK:
      return static_cast<double>(spec.dim) / spec.k;
    case CompressorKind::kScaledSign: return static_cast<double>(spec.dim);
    case CompressorKind::kRawSign: return std::nullopt;
  }
  return std::nullopt;
}

double RequireDelta(const CompressorSpec& spec) {
  auto d = Delta(spec);
  if (!d) throw InvalidArgument("compressor '" + spec.ToString() +
                                "' is non-contractive and has no delta");
  return *d;
}

Compressor::Compressor(CompressorSpec spec, std::uint64_t seed)
    : spec_(spec), rng_(seed), index_(spec.dim) {
  ValidateSpec(spec_);
  std::iota(index_.begin(), index_.end(), 0);
}

void Compressor::Compress(const Vector& x, Vector& out) {
  const int K = spec_.dim;
  if (x.size() != K)
    throw InvalidArgument("compressor expects dimension " + std::to_string(K) +
                          ", got " + std::to_string(x.size()));
  out.resize(K);
  switch (spec_.kind) {
    case CompressorKind::kIdentity:
      out = x;
      return;
    case CompressorKind::kTopK: {
      if (spec_.k == K) {
        out = x;
        return;
      }
      std::iota(index_.begin(), index_.end(), 0);
      // Strict total order: larger magnitude first, lower index on ties.
      auto before = [&x](int a, int b) {
        const double fa = std::abs(x(a)), fb = std::abs(x(b));
        return fa > fb || (fa == fb && a < b);
      };
      std::nth_element(index_.begin(), index_.begin() + (spec_.k - 1),
                       index_.end(), before);
      out.setZero();
      for (int i = 0; i < spec_.k; ++i) out(index_[i]) = x(index_[i]);
      return;
    }
    case CompressorKind::kScaledSign: {
      const double scale = x.lpNorm<1>() / K;
      for (int i = 0; i < K; ++i) out(i) = scale * Sign(x(i));
      return;
    }
    case CompressorKind::kRawSign:
      for (int i = 0; i < K; ++i) out(i) = Sign(x(i));
      return;
    case CompressorKind::kRandK: {
      // Partial Fisher-Yates over a fresh identity permutation.
      std::iota(index_.begin(), index_.end(), 0);
      for (int i = 0; i < spec_.k; ++i) {
        const int j = i + static_cast<int>(Uniform01(rng_) * (K - i));
        std::swap(index_[i], index_[std::min(j, K - 1)]);
      }
      const double scale = static_cast<double>(K) / spec_.k;
      out.setZero();
      for (int i = 0; i < spec_.k; ++i) out(index_[i]) = scale * x(index_[i]);
      return;
    }
  }
}

Vector Compress(const CompressorSpec& spec, const Vector& x) {
  if (spec.kind == CompressorKind::kRandK)
    throw InvalidArgument("rand_k needs a seeded Compressor instance");
  Compressor q(spec);
  return q(x);
}

ContractionReport VerifyContraction(const CompressorSpec& spec, int trials,
                                    std::uint64_t seed) {
  ValidateSpec(spec);
  const int K = spec.dim;
  Compressor q(spec, DeriveSeed(seed, Stream::kCompressor, 0));
  Rng rng(DeriveSeed(seed, Stream::kChecker, 0));
  std::normal_distribution<double> normal(0.0, 1.0);

  ContractionReport report;
  report.witness = Vector::Zero(K);
  bool seen = false;
  auto consider = [&](const Vector& x) {
    const double norm_sq = x.squaredNorm();
    if (norm_sq == 0.0) return;
    const double ratio = (q(x) - x).squaredNorm() / norm_sq;
    if (!seen || ratio > report.max_ratio) {
      report.max_ratio = ratio;
      report.witness = x;
      seen = true;
    }
  };

  for (int i = 0; i < K; ++i) consider(Vector::Unit(K, i));
  consider(Vector::Ones(K));
  Vector spike = Vector::Zero(K);
  spike(0) = 100.0;
  consider(spike);
  for (int t = 0; t < trials; ++t) {
    Vector x(K);
    for (int i = 0; i < K; ++i) x(i) = normal(rng);
    // Spread magnitudes over several decades.
    x *= std::pow(10.0, 4.0 * Uniform01(rng) - 2.0);
    consider(x);
  }

  const auto delta = Delta(spec);
  if (spec.contractive()) {
    report.bound = 1.0 - 1.0 / *delta;
    report.pass = report.max_ratio <= report.bound + kContractionSlack;
  } else {
    report.bound = delta ? 1.0 - 1.0 / *delta
                         : std::numeric_limits<double>::quiet_NaN();
    report.pass = false;
  }
  return report;
}

int CeilLog2(int x) {
  int bits = 0;
  while ((1LL << bits) < x) ++bits;
  return bits;
}

std::int64_t BitCost(const CompressorSpec& spec, int value_bits) {
  if (value_bits < 1) throw InvalidArgument("value_bits must be >= 1");
  const std::int64_t K = spec.dim;
  const std::int64_t b = value_bits;
  switch (spec.kind) {
    case CompressorKind::kIdentity: return K * b;
    case CompressorKind::kTopK: return spec.k * (b + CeilLog2(spec.dim));
    case CompressorKind::kScaledSign: return K + b;
    case CompressorKind::kRawSign: return K;
    case CompressorKind::kRandK: return spec.k * b;
  }
  return 0;
}

}  // namespace efsa
