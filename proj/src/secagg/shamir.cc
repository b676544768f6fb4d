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

#include "dhdmm/secagg/shamir.h"

#include <algorithm>

#include "absl/strings/str_cat.h"
#include "dhdmm/status.h"

namespace dhdmm::secagg {
namespace {

constexpr uint64_t kP = kShareField;

uint64_t AddMod61(uint64_t a, uint64_t b) {
  uint64_t s = a + b;
  return s >= kP ? s - kP : s;
}

uint64_t SubMod61(uint64_t a, uint64_t b) { return a >= b ? a - b : a + kP - b; }

absl::Status CheckPoints(std::span<const uint64_t> xs) {
  std::vector<uint64_t> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] == 0 || sorted[i] >= kP ||
        (i > 0 && sorted[i] == sorted[i - 1])) {
      return MakeError(ErrorKind::kInvalidConfig,
                       "share points must be distinct, nonzero field elements");
    }
  }
  return absl::OkStatus();
}

// Lagrange basis values at zero for the given points.
std::vector<uint64_t> LagrangeAtZero(std::span<const uint64_t> xs) {
  const size_t t = xs.size();
  std::vector<uint64_t> num(t, 1), den(t, 1);
  for (size_t i = 0; i < t; ++i) {
    for (size_t j = 0; j < t; ++j) {
      if (i == j) continue;
      num[i] = MulMod61(num[i], xs[j]);
      den[i] = MulMod61(den[i], SubMod61(xs[j], xs[i]));
    }
  }
  // Batch inversion of the denominators.
  std::vector<uint64_t> prefix(t + 1, 1);
  for (size_t i = 0; i < t; ++i) prefix[i + 1] = MulMod61(prefix[i], den[i]);
  uint64_t inv = InvMod61(prefix[t]);
  std::vector<uint64_t> out(t);
  for (size_t i = t; i-- > 0;) {
    uint64_t den_inv = MulMod61(inv, prefix[i]);
    inv = MulMod61(inv, den[i]);
    out[i] = MulMod61(num[i], den_inv);
  }
  return out;
}

}  // namespace

uint64_t MulMod61(uint64_t a, uint64_t b) {
  unsigned __int128 z = static_cast<unsigned __int128>(a) * b;
  uint64_t lo = static_cast<uint64_t>(z) & kP;
  uint64_t hi = static_cast<uint64_t>(z >> 61);
  return AddMod61(lo, hi);
}

uint64_t InvMod61(uint64_t a) {
  uint64_t result = 1, base = a, e = kP - 2;
  while (e > 0) {
    if (e & 1) result = MulMod61(result, base);
    base = MulMod61(base, base);
    e >>= 1;
  }
  return result;
}

absl::StatusOr<std::vector<Share>> ShareSecret(uint64_t secret, int t,
                                               std::span<const uint64_t> xs,
                                               Rng& rng) {
  if (t < 1) return MakeError(ErrorKind::kInvalidConfig, "threshold must be >= 1");
  if (secret >= kP) {
    return MakeError(ErrorKind::kInvalidConfig, "secret outside the field");
  }
  DHDMM_RETURN_IF_ERROR(CheckPoints(xs));
  std::vector<uint64_t> coeffs(t);
  coeffs[0] = secret;
  for (int i = 1; i < t; ++i) coeffs[i] = rng.UniformBelow(kP);
  std::vector<Share> shares;
  shares.reserve(xs.size());
  for (uint64_t x : xs) {
    uint64_t y = 0;
    for (int i = t - 1; i >= 0; --i) y = AddMod61(MulMod61(y, x), coeffs[i]);
    shares.push_back({x, y});
  }
  return shares;
}

absl::StatusOr<std::vector<Share>> ShareSecret(uint64_t secret, int t, int m,
                                               Rng& rng) {
  if (t < 1 || t > m) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat("need 1 <= t <= m, got t=", t, " m=", m));
  }
  std::vector<uint64_t> xs(m);
  for (int i = 0; i < m; ++i) xs[i] = i + 1;
  return ShareSecret(secret, t, xs, rng);
}

absl::StatusOr<uint64_t> RecoverSecret(std::span<const Share> shares, int t) {
  if (t < 1 || shares.size() < static_cast<size_t>(t)) {
    return MakeError(ErrorKind::kRecoveryFailure,
                     absl::StrCat("have ", shares.size(), " shares, need ", t));
  }
  std::vector<uint64_t> xs(t);
  for (int i = 0; i < t; ++i) xs[i] = shares[i].x;
  if (!CheckPoints(xs).ok()) {
    return MakeError(ErrorKind::kRecoveryFailure, "repeated or invalid share point");
  }
  std::vector<uint64_t> lambda = LagrangeAtZero(xs);
  uint64_t secret = 0;
  for (int i = 0; i < t; ++i) {
    secret = AddMod61(secret, MulMod61(lambda[i], shares[i].y));
  }
  return secret;
}

size_t ChunkCount(size_t secret_bytes) {
  return (secret_bytes + kChunkBytes - 1) / kChunkBytes;
}

absl::StatusOr<std::vector<std::vector<uint64_t>>> ShareBytes(
    std::span<const uint8_t> secret, int t, std::span<const uint64_t> xs,
    Rng& rng) {
  const size_t chunks = ChunkCount(secret.size());
  std::vector<std::vector<uint64_t>> out(xs.size(), std::vector<uint64_t>(chunks));
  for (size_t c = 0; c < chunks; ++c) {
    uint64_t value = 0;
    for (size_t b = 0; b < kChunkBytes; ++b) {
      size_t idx = c * kChunkBytes + b;
      if (idx < secret.size()) value |= static_cast<uint64_t>(secret[idx]) << (8 * b);
    }
    DHDMM_ASSIGN_OR_RETURN(std::vector<Share> shares,
                           ShareSecret(value, t, xs, rng));
    for (size_t h = 0; h < xs.size(); ++h) out[h][c] = shares[h].y;
  }
  return out;
}

absl::StatusOr<std::string> RecoverBytes(
    std::span<const uint64_t> xs,
    std::span<const std::vector<uint64_t>> shares, int t,
    size_t secret_bytes) {
  if (xs.size() != shares.size()) {
    return MakeError(ErrorKind::kRecoveryFailure, "share and point counts differ");
  }
  if (t < 1 || xs.size() < static_cast<size_t>(t)) {
    return MakeError(ErrorKind::kRecoveryFailure,
                     absl::StrCat("have ", xs.size(), " shares, need ", t));
  }
  std::span<const uint64_t> points = xs.first(t);
  if (!CheckPoints(points).ok()) {
    return MakeError(ErrorKind::kRecoveryFailure, "repeated or invalid share point");
  }
  const size_t chunks = ChunkCount(secret_bytes);
  std::vector<uint64_t> lambda = LagrangeAtZero(points);
  std::string out(secret_bytes, '\0');
  for (size_t c = 0; c < chunks; ++c) {
    uint64_t value = 0;
    for (int i = 0; i < t; ++i) {
      if (shares[i].size() != chunks) {
        return MakeError(ErrorKind::kRecoveryFailure, "share has wrong chunk count");
      }
      value = AddMod61(value, MulMod61(lambda[i], shares[i][c]));
    }
    if (value >> (8 * kChunkBytes)) {
      return MakeError(ErrorKind::kRecoveryFailure, "recovered chunk out of range");
    }
    for (size_t b = 0; b < kChunkBytes; ++b) {
      size_t idx = c * kChunkBytes + b;
      if (idx < secret_bytes) out[idx] = static_cast<char>(value >> (8 * b));
    }
  }
  return out;
}

}  // namespace dhdmm::secagg
