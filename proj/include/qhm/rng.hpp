// Copyright 2026 The QHM Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QHM_RNG_HPP
#define QHM_RNG_HPP

#include <cstdint>
#include <random>

namespace qhm {

/// Seedable 64-bit generator with a platform-stable output stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distribution helpers are implemented here rather than taken from
/// <random>, because the standard distributions are implementation-defined.
/// `uniform_index` uses integer arithmetic only, so sampled index streams are
/// bit-identical across compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n), unbiased (Lemire's multiply-and-reject).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller. Uses libm, so only reproducible up to
  /// the platform's log/cos implementation; used for problem generation.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace qhm

#endif  // QHM_RNG_HPP
