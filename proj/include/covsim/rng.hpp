// Copyright 2026 the covsim authors
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

#pragma once

#include <cmath>
#include <cstdint>

namespace covsim::rng {

// Counter-based randomness: every draw is a pure function of the integers
// that key it, so simulation results do not depend on host iteration order
// or on how many draws other subsystems consumed.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a) { return splitmix64(a); }

template <typename... Rest>
std::uint64_t mix(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return mix(splitmix64(a ^ splitmix64(b)), rest...);
}

/// Maps a hash to (0, 1]: 53 uniform mantissa bits, zero excluded so the
/// value is always a valid Box-Muller log argument.
inline double to_unit(std::uint64_t h) {
  return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
}

/// Uniform draw in [lo, hi) keyed by `h`.
inline double uniform(std::uint64_t h, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Standard normal draw keyed by `h` (Box-Muller, cosine branch).
inline double gaussian(std::uint64_t h) {
  const double u1 = to_unit(h);
  const double u2 = to_unit(splitmix64(h ^ 0xD1B54A32D192ED03ULL));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace covsim::rng
