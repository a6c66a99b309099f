// Copyright 2026 The Sewerdet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Seed derivation. Every random stream in the toolkit is keyed by the
// top-level seed plus a (stream, index) pair, so per-pipe and per-patch draws
// do not depend on processing order.

#ifndef SEWERDET_RANDOM_H_
#define SEWERDET_RANDOM_H_

#include <cstdint>
#include <random>

namespace sewerdet {

// SplitMix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Well-known stream tags.
enum class Stream : std::uint64_t {
  kPipe = 1,
  kPatch = 2,
  kDetector = 3,
  kRender = 4,
};

constexpr std::uint64_t DeriveSeed(std::uint64_t seed, Stream stream,
                                   std::uint64_t index) {
  return Mix64(Mix64(seed ^ Mix64(static_cast<std::uint64_t>(stream))) ^ index);
}

// Uniform double in [0, 1) from the top 53 bits; identical across standard
// libraries, unlike std::uniform_real_distribution.
inline double UnitDouble(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace sewerdet

#endif  // SEWERDET_RANDOM_H_
