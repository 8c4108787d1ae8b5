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

#ifndef EFSA_COMMON_H_
#define EFSA_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace efsa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Raised for malformed inputs: bad dimensions, out-of-range parameters,
// unparseable configuration.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative routine (power iteration, mixing-time search) hit its cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A trace was asked for something it cannot give, e.g. a rate fit on a
// diverged run.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent sub-streams of a master seed. Every consumer of randomness
// takes its own tag so that, e.g., trial 1 / agent 0 and trial 0 / agent 1
// never share a stream.
enum class Stream : std::uint64_t {
  kEnvironment = 0x01,
  kFeatures = 0x02,
  kTrial = 0x03,
  kAgent = 0x04,
  kCompressor = 0x05,
  kSampler = 0x06,
  kChecker = 0x07,
};

inline std::uint64_t DeriveSeed(std::uint64_t master, Stream stream,
                                std::uint64_t index) {
  return SplitMix64(SplitMix64(master ^ static_cast<std::uint64_t>(stream)) ^
                    index);
}

// Uniform double in [0, 1) built from the top 53 bits.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace efsa

#endif  // EFSA_COMMON_H_
