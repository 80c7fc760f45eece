// Copyright 2026 The qtomo Authors
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

#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace qtomo {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Substream seed derivation used by every stochastic stage:
///   h = splitmix64(master); for each tag t: h = splitmix64(h ^ t)
/// The first tag is conventionally a stage identifier (see SeedStage).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(master);
  for (auto t : tags) h = splitmix64(h ^ t);
  return h;
}

namespace seed_stage {
inline constexpr std::uint64_t kSimulate = 1;
inline constexpr std::uint64_t kTrainingSplit = 2;
inline constexpr std::uint64_t kBootstrap = 3;
inline constexpr std::uint64_t kMultiStart = 4;
}  // namespace seed_stage

/// Multinomial draw by sequential conditional binomials. Negative entries are
/// treated as zero; the probabilities need not be normalized.
inline std::vector<std::int64_t> sample_multinomial(std::int64_t trials, std::span<const double> probs, Rng& rng) {
  const std::size_t n = probs.size();
  std::vector<std::int64_t> out(n, 0);
  if (n == 0 || trials <= 0) return out;
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t b = n; b-- > 0;) tail[b] = tail[b + 1] + std::max(0.0, probs[b]);
  if (!(tail[0] > 0.0)) throw std::invalid_argument("sample_multinomial: no probability mass");
  std::int64_t remaining = trials;
  for (std::size_t b = 0; b < n && remaining > 0; ++b) {
    const double pb = std::max(0.0, probs[b]);
    if (pb == 0.0) continue;
    if (!(tail[b + 1] > 0.0)) {
      out[b] = remaining;
      break;
    }
    const double p = std::min(1.0, pb / tail[b]);
    std::binomial_distribution<std::int64_t> dist(remaining, p);
    const std::int64_t x = dist(rng);
    out[b] = x;
    remaining -= x;
  }
  return out;
}

}  // namespace qtomo
