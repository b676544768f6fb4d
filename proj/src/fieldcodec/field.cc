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

#include "dhdmm/fieldcodec/field.h"

#include <cmath>
#include <cstring>
#include <optional>

#include "absl/strings/str_cat.h"
#include "dhdmm/dpnoise/samplers.h"
#include "dhdmm/status.h"

namespace dhdmm::fieldcodec {
namespace {

using uint128 = unsigned __int128;

uint64_t PowMod(uint64_t base, uint64_t exp, uint64_t m) {
  uint64_t result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = static_cast<uint128>(result) * base % m;
    base = static_cast<uint128>(base) * base % m;
    exp >>= 1;
  }
  return result;
}

void PutU64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

uint64_t GetU64(const uint8_t* in) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | in[i];
  return v;
}

}  // namespace

bool IsPrime(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t q : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % q == 0) return n == q;
  }
  uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    uint64_t x = PowMod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = static_cast<uint128>(x) * x % n;
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

absl::Status FieldParams::Validate() const {
  if (p <= 2 || !IsPrime(p)) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat("modulus ", p, " is not an odd prime"));
  }
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) {
    return MakeError(ErrorKind::kInvalidConfig, "gamma must be >= 1");
  }
  return absl::OkStatus();
}

uint64_t ModAdd(uint64_t a, uint64_t b, uint64_t p) {
  uint64_t s = a + b;
  if (s < a || s >= p) s -= p;
  return s;
}

uint64_t ModSub(uint64_t a, uint64_t b, uint64_t p) {
  return a >= b ? a - b : a + (p - b);
}

uint64_t ModMul(uint64_t a, uint64_t b, uint64_t p) {
  uint128 prod = static_cast<uint128>(a) * b;
  if (p == kMersenne61) {
    uint64_t r = (static_cast<uint64_t>(prod) & kMersenne61) +
                 static_cast<uint64_t>(prod >> 61);
    r = (r & kMersenne61) + (r >> 61);
    return r >= kMersenne61 ? r - kMersenne61 : r;
  }
  return static_cast<uint64_t>(prod % p);
}

uint64_t ModFromSigned(int64_t x, uint64_t p) {
  if (x >= 0) return static_cast<uint64_t>(x) % p;
  uint64_t r = (~static_cast<uint64_t>(x) + 1) % p;  // |x| mod p
  return r == 0 ? 0 : p - r;
}

int64_t DecodeInt(uint64_t x, uint64_t p) {
  if (x <= (p - 1) / 2) return static_cast<int64_t>(x);
  return -static_cast<int64_t>(p - x);
}

absl::StatusOr<EncodedVector> EncodeWithVariance(std::span<const double> v,
                                                 const FieldParams& fp,
                                                 double sigma2, Rng& rng) {
  std::optional<dpnoise::DiscreteGaussianSampler> sampler;
  if (sigma2 > 0.0) {
    DHDMM_ASSIGN_OR_RETURN(sampler,
                           dpnoise::DiscreteGaussianSampler::Create(sigma2));
  }
  const uint64_t half = fp.half();
  EncodedVector out;
  out.elements.reserve(v.size());
  for (size_t j = 0; j < v.size(); ++j) {
    double scaled = std::floor(fp.gamma * v[j]);
    if (!std::isfinite(scaled) || std::abs(scaled) > 9.0e18) {
      return MakeError(ErrorKind::kRangeOverflow,
                       absl::StrCat("value ", v[j], " at index ", j,
                                    " exceeds the field range"));
    }
    __int128 w = static_cast<int64_t>(scaled);
    if (sampler) w += sampler->Sample(rng);
    __int128 magnitude = w < 0 ? -w : w;
    if (magnitude > static_cast<__int128>(half)) {
      return MakeError(ErrorKind::kRangeOverflow,
                       absl::StrCat("encoded value at index ", j,
                                    " exceeds (p-1)/2 = ", half));
    }
    out.elements.push_back(ModFromSigned(static_cast<int64_t>(w), fp.p));
  }
  return out;
}

absl::StatusOr<EncodedVector> Encode(std::span<const double> v,
                                     const FieldParams& fp,
                                     const dpnoise::PrivacyParams& priv,
                                     Rng& rng, EncodeOptions options) {
  double sigma2 = options.noise_disabled ? 0.0 : dpnoise::PerClientVariance(priv);
  return EncodeWithVariance(v, fp, sigma2, rng);
}

absl::StatusOr<EncodedVector> FieldAdd(const EncodedVector& a,
                                       const EncodedVector& b, uint64_t p) {
  if (a.size() != b.size()) {
    return MakeError(ErrorKind::kDimensionError,
                     absl::StrCat("cannot add field vectors of lengths ",
                                  a.size(), " and ", b.size()));
  }
  EncodedVector out = a;
  FieldAddInPlace(out, b, p);
  return out;
}

void FieldAddInPlace(EncodedVector& a, const EncodedVector& b, uint64_t p) {
  for (size_t i = 0; i < a.size(); ++i) {
    a.elements[i] = ModAdd(a.elements[i], b.elements[i], p);
  }
}

void FieldSubInPlace(EncodedVector& a, const EncodedVector& b, uint64_t p) {
  for (size_t i = 0; i < a.size(); ++i) {
    a.elements[i] = ModSub(a.elements[i], b.elements[i], p);
  }
}

std::vector<double> Decode(const EncodedVector& v, const FieldParams& fp) {
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<double>(DecodeInt(v.elements[i], fp.p)) / fp.gamma;
  }
  return out;
}

absl::Status CheckFieldCapacity(const FieldParams& fp, int64_t n,
                                double v_max, double sigma2, int64_t k) {
  long double bound =
      2.0L * n *
      (static_cast<long double>(fp.gamma) * v_max +
       12.0L * std::sqrt(static_cast<long double>(sigma2)) *
           std::sqrt(static_cast<long double>(k)));
  if (!(static_cast<long double>(fp.p) > bound)) {
    return MakeError(
        ErrorKind::kRangeOverflow,
        absl::StrCat("modulus ", fp.p, " too small: an aggregate of ", n,
                     " clients needs p > ", static_cast<double>(bound)));
  }
  return absl::OkStatus();
}

std::string Serialize(const EncodedVector& v) {
  std::string out;
  out.reserve(8 * (v.size() + 1));
  PutU64(out, v.size());
  for (uint64_t e : v.elements) PutU64(out, e);
  return out;
}

absl::StatusOr<EncodedVector> Deserialize(std::span<const uint8_t> bytes,
                                          uint64_t p) {
  if (bytes.size() < 8) {
    return MakeError(ErrorKind::kDimensionError, "truncated field vector");
  }
  uint64_t count = GetU64(bytes.data());
  if ((bytes.size() - 8) / 8 != count || (bytes.size() - 8) % 8 != 0) {
    return MakeError(ErrorKind::kDimensionError,
                     absl::StrCat("field vector declares ", count,
                                  " elements but carries ",
                                  (bytes.size() - 8), " bytes"));
  }
  EncodedVector v;
  v.elements.resize(count);
  for (uint64_t i = 0; i < count; ++i) {
    v.elements[i] = GetU64(bytes.data() + 8 + 8 * i);
    if (v.elements[i] >= p) {
      return MakeError(ErrorKind::kRangeOverflow,
                       absl::StrCat("element ", i, " not reduced mod p"));
    }
  }
  return v;
}

}  // namespace dhdmm::fieldcodec
