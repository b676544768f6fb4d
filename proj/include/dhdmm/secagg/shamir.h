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

#ifndef DHDMM_SECAGG_SHAMIR_H_
#define DHDMM_SECAGG_SHAMIR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dhdmm/fieldcodec/field.h"
#include "dhdmm/random.h"

namespace dhdmm::secagg {

// Shamir sharing always runs over the Mersenne field, independent of the
// aggregation modulus.
inline constexpr uint64_t kShareField = fieldcodec::kMersenne61;
// Byte secrets are split into chunks of this many bytes, each below 2^56.
inline constexpr size_t kChunkBytes = 7;

struct Share {
  uint64_t x = 0;
  uint64_t y = 0;
};

uint64_t MulMod61(uint64_t a, uint64_t b);
uint64_t InvMod61(uint64_t a);

// Evaluates a random degree t-1 polynomial with constant term `secret` at
// each of `xs` (distinct and nonzero). With fewer points than t the secret
// is unrecoverable by construction.
absl::StatusOr<std::vector<Share>> ShareSecret(uint64_t secret, int t,
                                               std::span<const uint64_t> xs,
                                               Rng& rng);
// Shares at x = 1..m. Requires 1 <= t <= m.
absl::StatusOr<std::vector<Share>> ShareSecret(uint64_t secret, int t, int m,
                                               Rng& rng);

// Lagrange interpolation at zero from the first t shares. Fewer than t
// shares, or repeated x, is a RecoveryFailure.
absl::StatusOr<uint64_t> RecoverSecret(std::span<const Share> shares, int t);

size_t ChunkCount(size_t secret_bytes);

// shares[h][c] is holder h's share of chunk c.
absl::StatusOr<std::vector<std::vector<uint64_t>>> ShareBytes(
    std::span<const uint8_t> secret, int t, std::span<const uint64_t> xs,
    Rng& rng);

absl::StatusOr<std::string> RecoverBytes(
    std::span<const uint64_t> xs,
    std::span<const std::vector<uint64_t>> shares, int t,
    size_t secret_bytes);

}  // namespace dhdmm::secagg

#endif  // DHDMM_SECAGG_SHAMIR_H_
