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

// Compression operators Q used on update directions. Every operator except
// raw_sign and rand_k obeys the contraction
//   ||Q(x) - x||^2 <= (1 - 1/delta) ||x||^2
// for a distortion factor delta >= 1.

#ifndef EFSA_COMPRESSION_H_
#define EFSA_COMPRESSION_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "efsa/common.h"

namespace efsa {

enum class CompressorKind { kIdentity, kTopK, kScaledSign, kRawSign, kRandK };

struct CompressorSpec {
  CompressorKind kind = CompressorKind::kIdentity;
  int k = 0;  // top_k / rand_k only
  int dim = 0;

  static CompressorSpec Identity(int dim);
  static CompressorSpec TopK(int k, int dim);
  static CompressorSpec ScaledSign(int dim);
  static CompressorSpec RawSign(int dim);
  static CompressorSpec RandK(int k, int dim);

  // "identity" | "topk:k" | "signscaled" | "signraw" | "randk:k"
  static CompressorSpec Parse(std::string_view text, int dim);
  std::string ToString() const;

  // True when the per-sample contraction holds, i.e. the spec can be fed
  // to the convergence checks.
  bool contractive() const {
    return kind == CompressorKind::kIdentity || kind == CompressorKind::kTopK ||
           kind == CompressorKind::kScaledSign;
  }
};

void ValidateSpec(const CompressorSpec& spec);

// identity -> 1, top_k -> K/k, scaled_sign -> K, rand_k -> K/k (the
// unbiased rand_k is not contractive; the value is what the bit budget
// buys, see VerifyContraction). raw_sign -> nullopt ("non-contractive").
std::optional<double> Delta(const CompressorSpec& spec);

// delta for specs that must have one; throws for raw_sign.
double RequireDelta(const CompressorSpec& spec);

// Stateful operator. Pure except rand_k, which draws coordinates from a
// private generator seeded at construction.
class Compressor {
 public:
  explicit Compressor(CompressorSpec spec, std::uint64_t seed = 0);

  void Compress(const Vector& x, Vector& out);
  Vector operator()(const Vector& x) {
    Vector out(x.size());
    Compress(x, out);
    return out;
  }

  const CompressorSpec& spec() const { return spec_; }

 private:
  CompressorSpec spec_;
  Rng rng_;
  std::vector<int> index_;
};

// Deterministic operators as a free function (throws for rand_k).
Vector Compress(const CompressorSpec& spec, const Vector& x);

struct ContractionReport {
  double max_ratio = 0.0;  // max ||Q(x) - x||^2 / ||x||^2
  double bound = 0.0;      // 1 - 1/delta (NaN for raw_sign)
  bool pass = false;
  Vector witness;          // input attaining max_ratio
};

// Random standard-normal inputs plus adversarial one-hot, constant and
// large-magnitude spike vectors. raw_sign and rand_k always report
// pass = false.
ContractionReport VerifyContraction(const CompressorSpec& spec, int trials,
                                    std::uint64_t seed);

// Bits per message: identity K*b, top_k k*(b + ceil(log2 K)),
// scaled_sign K + b, raw_sign K, rand_k k*b (indices from a shared seed).
std::int64_t BitCost(const CompressorSpec& spec, int value_bits = 32);

int CeilLog2(int x);

}  // namespace efsa

#endif  // EFSA_COMPRESSION_H_
