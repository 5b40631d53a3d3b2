// Copyright 2026 The gemdyn Authors
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

#ifndef GEMDYN_RNG_HPP_
#define GEMDYN_RNG_HPP_

// All randomness comes from std::mt19937_64 streams whose seeds are derived
// from one master seed and a component tag, so adding workers or reordering
// components never changes any individual stream.

#include <cstdint>
#include <random>
#include <string_view>

namespace gemdyn {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ fnv1a(tag)) + index);
}

inline Rng make_rng(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(master, tag, index));
}

}  // namespace gemdyn

#endif  // GEMDYN_RNG_HPP_
