// Copyright 2026 The wop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WOP_RANDOM_H_
#define WOP_RANDOM_H_

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace wop {

// All randomness in the toolkit flows through this generator so that any
// adapter can replicate it bit for bit:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Bounded draws use rejection on the top of the 64-bit range, so they are
// exactly uniform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t NextU64();

  // Uniform integer in [0, bound). bound must be > 0.
  uint64_t Uniform(uint64_t bound);

  // Uniform double in [0, 1) with 53 bits of mantissa.
  double UniformReal();

  // Fisher-Yates from the back: for i = n-1..1, swap(v[i], v[Uniform(i+1)]).
  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(Uniform(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<size_t> SampleWithoutReplacement(size_t n, size_t k);

 private:
  uint64_t state_;
};

// First output of Rng(x).
uint64_t SplitMix64(uint64_t x);

// 64-bit FNV-1a over the bytes of s.
uint64_t Fnv1a64(std::string_view s);

// Per-example seed: SplitMix64(run_seed ^ Fnv1a64(id)).
uint64_t DeriveSeed(uint64_t run_seed, std::string_view id);

// Seed of the r-th (0-based) repeated run: SplitMix64(run_seed + r + 1).
uint64_t DeriveRunSeed(uint64_t run_seed, uint64_t run_index);

}  // namespace wop

#endif  // WOP_RANDOM_H_
