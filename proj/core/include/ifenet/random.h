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

#ifndef IFENET_RANDOM_H_
#define IFENET_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace ifenet {

// Every stochastic step (split, init, shuffle, permutation oracle, trial)
// draws from an engine seeded by DeriveSeed(top_level_seed, tag...), so a
// single seed reproduces a whole run regardless of execution order.
//
// Mixing rule: h = splitmix64(seed); for each component c, h =
// splitmix64(h ^ c). String tags are first reduced with 64-bit FNV-1a.
uint64_t SplitMix64(uint64_t x);
uint64_t Fnv1a64(std::string_view bytes);
uint64_t DeriveSeed(uint64_t seed, std::initializer_list<uint64_t> components);
uint64_t DeriveSeed(uint64_t seed, std::string_view tag,
                    std::initializer_list<uint64_t> components = {});

using Rng = std::mt19937_64;

// Unbiased integer in [0, bound). Implemented on top of the raw engine output
// so sequences do not depend on the standard library's distributions.
uint64_t UniformIndex(Rng& rng, uint64_t bound);

// Real in [0, 1) with 53 random bits.
double UniformUnit(Rng& rng);

// Real in [lo, hi).
double UniformReal(Rng& rng, double lo, double hi);

// Standard normal via Box-Muller on UniformUnit.
double StandardNormal(Rng& rng);

// Fisher-Yates.
template <typename T>
void Shuffle(std::span<T> items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = UniformIndex(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

std::vector<size_t> RandomPermutation(size_t n, Rng& rng);

}  // namespace ifenet

#endif  // IFENET_RANDOM_H_
