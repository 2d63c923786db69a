/*
 * Copyright 2026 The specfuse Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SPECFUSE_RNG_H_
#define SPECFUSE_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace specfuse {

using Rng = std::mt19937_64;

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Purpose tags keep independent streams apart even when the numeric
// coordinates coincide.
enum class StreamTag : std::uint64_t {
  kData = 1,
  kPartition = 2,
  kHoldout = 3,
  kInit = 4,
  kLocalTraining = 5,
  kStandalone = 6,
  kFreeRider = 7,
};

// Derives an independent PRNG stream from a seed and a list of
// coordinates (client id, round, ...).
inline Rng MakeStream(std::uint64_t seed, StreamTag tag,
                      std::initializer_list<std::uint64_t> coords = {}) {
  std::uint64_t h = SplitMix64(seed ^ SplitMix64(static_cast<std::uint64_t>(tag)));
  for (std::uint64_t c : coords) h = SplitMix64(h ^ SplitMix64(c + 0x632be59bd9b4e019ULL));
  return Rng(h);
}

}  // namespace specfuse

#endif  // SPECFUSE_RNG_H_
