/*
 * Copyright 2026 The IFENet Authors.
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

#include "ifenet/random.h"

#include <cmath>
#include <numbers>
#include <numeric>

namespace ifenet {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t Fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t DeriveSeed(uint64_t seed, std::initializer_list<uint64_t> components) {
  uint64_t h = SplitMix64(seed);
  for (const uint64_t c : components) h = SplitMix64(h ^ c);
  return h;
}

uint64_t DeriveSeed(uint64_t seed, std::string_view tag,
                    std::initializer_list<uint64_t> components) {
  uint64_t h = SplitMix64(SplitMix64(seed) ^ Fnv1a64(tag));
  for (const uint64_t c : components) h = SplitMix64(h ^ c);
  return h;
}

uint64_t UniformIndex(Rng& rng, uint64_t bound) {
  // Rejection sampling on the top of the range.
  const uint64_t limit = Rng::max() - (Rng::max() % bound + 1) % bound;
  uint64_t v;
  do {
    v = rng();
  } while (v > limit);
  return v % bound;
}

double UniformUnit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double UniformReal(Rng& rng, double lo, double hi) { return lo + (hi - lo) * UniformUnit(rng); }

double StandardNormal(Rng& rng) {
  double u1 = UniformUnit(rng);
  while (u1 <= 0.0) u1 = UniformUnit(rng);
  const double u2 = UniformUnit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<size_t> RandomPermutation(size_t n, Rng& rng) {
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  Shuffle(std::span<size_t>(perm), rng);
  return perm;
}

}  // namespace ifenet
