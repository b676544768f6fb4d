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

#ifndef DHDMM_FIELDCODEC_FIELD_H_
#define DHDMM_FIELDCODEC_FIELD_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dhdmm/dpnoise/accountant.h"
#include "dhdmm/random.h"

namespace dhdmm::fieldcodec {

inline constexpr uint64_t kMersenne61 = (uint64_t{1} << 61) - 1;

// Deterministic Miller-Rabin, exact for every 64-bit input.
bool IsPrime(uint64_t n);

struct FieldParams {
  uint64_t p = kMersenne61;
  double gamma = 1000.0;

  absl::Status Validate() const;
  // (p - 1) / 2, the largest magnitude representable as a signed value.
  uint64_t half() const { return (p - 1) / 2; }
};

struct EncodedVector {
  std::vector<uint64_t> elements;

  size_t size() const { return elements.size(); }
  bool operator==(const EncodedVector&) const = default;
};

uint64_t ModAdd(uint64_t a, uint64_t b, uint64_t p);
uint64_t ModSub(uint64_t a, uint64_t b, uint64_t p);
uint64_t ModMul(uint64_t a, uint64_t b, uint64_t p);
// Nonnegative representative of x mod p.
uint64_t ModFromSigned(int64_t x, uint64_t p);

// x if x <= (p-1)/2, else x - p.
int64_t DecodeInt(uint64_t x, uint64_t p);

struct EncodeOptions {
  // Debug switch for exactness checks. Disables the privacy noise.
  bool noise_disabled = false;
};

// Elementwise floor(gamma v_j) + N_Z(sigma2), reduced mod p. sigma2 == 0
// adds no noise. Fails with RangeOverflow when a noisy value falls outside
// [-(p-1)/2, (p-1)/2].
absl::StatusOr<EncodedVector> EncodeWithVariance(std::span<const double> v,
                                                 const FieldParams& fp,
                                                 double sigma2, Rng& rng);

// Algorithm-level encoder: the noise variance is the per-client variance
// of `priv`.
absl::StatusOr<EncodedVector> Encode(std::span<const double> v,
                                     const FieldParams& fp,
                                     const dpnoise::PrivacyParams& priv,
                                     Rng& rng, EncodeOptions options = {});

absl::StatusOr<EncodedVector> FieldAdd(const EncodedVector& a,
                                       const EncodedVector& b, uint64_t p);
// a += b, lengths must agree.
void FieldAddInPlace(EncodedVector& a, const EncodedVector& b, uint64_t p);
void FieldSubInPlace(EncodedVector& a, const EncodedVector& b, uint64_t p);

// DecodeInt then divide by gamma.
std::vector<double> Decode(const EncodedVector& v, const FieldParams& fp);

// Verifies an honest aggregate of n clients cannot wrap:
// p > 2 n (gamma v_max + 12 sqrt(sigma2) sqrt(k)).
absl::Status CheckFieldCapacity(const FieldParams& fp, int64_t n,
                                double v_max, double sigma2, int64_t k);

// Little-endian u64 count followed by little-endian u64 elements.
std::string Serialize(const EncodedVector& v);
absl::StatusOr<EncodedVector> Deserialize(std::span<const uint8_t> bytes,
                                          uint64_t p);

}  // namespace dhdmm::fieldcodec

#endif  // DHDMM_FIELDCODEC_FIELD_H_
