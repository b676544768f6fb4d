// Copyright 2026 The Distributed HDMM Authors
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

#ifndef DHDMM_RANDOM_H_
#define DHDMM_RANDOM_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace dhdmm {

using Seed32 = std::array<uint8_t, 32>;

// Deterministic ChaCha20 keystream exposed as a UniformRandomBitGenerator.
// Every random choice in the library is drawn from one of these, so a run is
// reproducible from its master seed. Not thread-safe; give each party or
// trial its own stream via Derive().
class Rng {
 public:
  using result_type = uint64_t;

  explicit Rng(uint64_t seed);
  explicit Rng(const Seed32& key, uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // Uniform integer in [0, bound). bound must be positive.
  uint64_t UniformBelow(uint64_t bound);
  unsigned __int128 UniformBelow128(unsigned __int128 bound);
  // Uniform double in [0, 1).
  double UniformDouble();
  bool FairCoin();

  void Fill(std::span<uint8_t> out);
  Seed32 NextSeed();

  // Independent child stream keyed by (this key, label, index). Does not
  // advance this generator.
  Rng Derive(std::string_view label, uint64_t index = 0) const;

 private:
  void Refill();

  Seed32 key_;
  uint64_t stream_;
  uint64_t block_counter_ = 0;
  std::array<uint64_t, 32> buffer_{};
  size_t position_;
};

// BLAKE2b-256 of the concatenated parts.
Seed32 HashToSeed(std::initializer_list<std::span<const uint8_t>> parts);

}  // namespace dhdmm

#endif  // DHDMM_RANDOM_H_
