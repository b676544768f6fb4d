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

#include "dhdmm/random.h"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace dhdmm {
namespace {

constexpr size_t kBlockBytes = 64;

void EnsureSodium() {
  static const bool initialized = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
    return true;
  }();
  (void)initialized;
}

std::array<uint8_t, 8> LittleEndian(uint64_t v) {
  std::array<uint8_t, 8> out;
  for (int i = 0; i < 8; ++i) out[i] = static_cast<uint8_t>(v >> (8 * i));
  return out;
}

}  // namespace

Rng::Rng(uint64_t seed) : stream_(0), position_(buffer_.size()) {
  std::array<uint8_t, 8> le = LittleEndian(seed);
  static constexpr uint8_t kLabel[] = "dhdmm.rng.master";
  key_ = HashToSeed({std::span<const uint8_t>(kLabel, sizeof(kLabel) - 1),
                     std::span<const uint8_t>(le)});
}

Rng::Rng(const Seed32& key, uint64_t stream)
    : key_(key), stream_(stream), position_(buffer_.size()) {
  EnsureSodium();
}

void Rng::Refill() {
  static_assert(sizeof(buffer_) % kBlockBytes == 0);
  std::array<uint8_t, 8> nonce = LittleEndian(stream_);
  std::array<uint8_t, sizeof(buffer_)> zeros{};
  auto* out = reinterpret_cast<unsigned char*>(buffer_.data());
  crypto_stream_chacha20_xor_ic(out, zeros.data(), zeros.size(), nonce.data(),
                                block_counter_, key_.data());
  block_counter_ += sizeof(buffer_) / kBlockBytes;
  position_ = 0;
}

Rng::result_type Rng::operator()() {
  if (position_ == buffer_.size()) Refill();
  return buffer_[position_++];
}

uint64_t Rng::UniformBelow(uint64_t bound) {
  // Lemire-style rejection on the low product word.
  unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
  uint64_t low = static_cast<uint64_t>(m);
  if (low < bound) {
    uint64_t threshold = -bound % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>((*this)()) * bound;
      low = static_cast<uint64_t>(m);
    }
  }
  return static_cast<uint64_t>(m >> 64);
}

unsigned __int128 Rng::UniformBelow128(unsigned __int128 bound) {
  if ((bound >> 64) == 0) return UniformBelow(static_cast<uint64_t>(bound));
  int bits = 128 - __builtin_clzll(static_cast<uint64_t>(bound >> 64));
  unsigned __int128 mask = bits == 128
                               ? ~static_cast<unsigned __int128>(0)
                               : ((static_cast<unsigned __int128>(1) << bits) - 1);
  while (true) {
    unsigned __int128 v =
        (static_cast<unsigned __int128>((*this)()) << 64) | (*this)();
    v &= mask;
    if (v < bound) return v;
  }
}

double Rng::UniformDouble() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

bool Rng::FairCoin() { return ((*this)() & 1) != 0; }

void Rng::Fill(std::span<uint8_t> out) {
  size_t i = 0;
  while (i < out.size()) {
    uint64_t word = (*this)();
    for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
      out[i] = static_cast<uint8_t>(word >> (8 * b));
    }
  }
}

Seed32 Rng::NextSeed() {
  Seed32 seed;
  Fill(seed);
  return seed;
}

Rng Rng::Derive(std::string_view label, uint64_t index) const {
  std::array<uint8_t, 8> stream = LittleEndian(stream_);
  std::array<uint8_t, 8> idx = LittleEndian(index);
  Seed32 child = HashToSeed(
      {std::span<const uint8_t>(key_), std::span<const uint8_t>(stream),
       std::span<const uint8_t>(
           reinterpret_cast<const uint8_t*>(label.data()), label.size()),
       std::span<const uint8_t>(idx)});
  return Rng(child, 0);
}

Seed32 HashToSeed(std::initializer_list<std::span<const uint8_t>> parts) {
  EnsureSodium();
  crypto_generichash_state state;
  crypto_generichash_init(&state, nullptr, 0, 32);
  for (std::span<const uint8_t> part : parts) {
    // Length-prefix each part so concatenation boundaries are unambiguous.
    std::array<uint8_t, 8> len = LittleEndian(part.size());
    crypto_generichash_update(&state, len.data(), len.size());
    crypto_generichash_update(&state, part.data(), part.size());
  }
  Seed32 out;
  crypto_generichash_final(&state, out.data(), out.size());
  return out;
}

}  // namespace dhdmm
