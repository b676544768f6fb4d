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

#include "dhdmm/dpnoise/samplers.h"

#include <cmath>
#include <random>

#include "absl/strings/str_cat.h"
#include "dhdmm/status.h"

namespace dhdmm::dpnoise {
namespace {

// Bernoulli(exp(-num/den)) for num <= den.
bool BernoulliExpFraction(uint128 num, uint128 den, Rng& rng) {
  uint128 k = 1;
  while (rng.UniformBelow128(den * k) < num) ++k;
  return (k & 1) == 1;
}

bool BernoulliExpMinusOne(Rng& rng) { return BernoulliExpFraction(1, 1, rng); }

// Exponent too large to represent: acceptance needs more consecutive
// exp(-1) successes than any run will ever see.
bool BernoulliExpUnbounded(Rng& rng) {
  for (uint64_t i = 0; i < (uint64_t{1} << 62); ++i) {
    if (!BernoulliExpMinusOne(rng)) return false;
  }
  return true;
}

uint64_t IntegerSqrt(uint64_t v) {
  uint64_t r = static_cast<uint64_t>(std::sqrt(static_cast<double>(v)));
  while (r > 0 && static_cast<uint128>(r) * r > v) --r;
  while (static_cast<uint128>(r + 1) * (r + 1) <= v) ++r;
  return r;
}

constexpr uint128 kSquareLimit = static_cast<uint128>(1) << 63;

}  // namespace

bool SampleBernoulliExp(uint128 num, uint128 den, Rng& rng) {
  uint128 whole = num / den;
  for (uint128 i = 0; i < whole; ++i) {
    if (!BernoulliExpMinusOne(rng)) return false;
  }
  return BernoulliExpFraction(num % den, den, rng);
}

absl::StatusOr<DiscreteGaussianSampler> DiscreteGaussianSampler::Create(
    double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2) ||
      sigma2 > std::ldexp(1.0, 50)) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat("discrete Gaussian variance ", sigma2,
                                  " outside (0, 2^50]"));
  }
  int exponent = std::ilogb(sigma2) + 1;  // sigma2 < 2^exponent
  int shift = std::clamp(40 - exponent, 0, 30);
  double scaled = std::ceil(std::ldexp(sigma2, shift));
  uint64_t num = static_cast<uint64_t>(scaled);
  if (num == 0) num = 1;
  uint64_t t = IntegerSqrt(num >> shift) + 1;
  return DiscreteGaussianSampler(num, shift, t);
}

double DiscreteGaussianSampler::effective_sigma2() const {
  return std::ldexp(static_cast<double>(num_), -shift_);
}

int64_t DiscreteGaussianSampler::SampleDiscreteLaplace(Rng& rng) const {
  while (true) {
    uint64_t u = rng.UniformBelow(t_);
    if (!BernoulliExpFraction(u, t_, rng)) continue;
    uint64_t v = 0;
    while (BernoulliExpMinusOne(rng)) ++v;
    uint64_t x = u + t_ * v;
    bool negative = rng.FairCoin();
    if (negative && x == 0) continue;
    return negative ? -static_cast<int64_t>(x) : static_cast<int64_t>(x);
  }
}

int64_t DiscreteGaussianSampler::Sample(Rng& rng) const {
  // With sigma2 = N / 2^s, accept Y with probability
  // exp(-(|Y| - sigma2/t)^2 / (2 sigma2)) = exp(-(|Y| t 2^s - N)^2 /
  // (2 N t^2 2^s)).
  const uint128 den = (static_cast<uint128>(2) * num_ * t_ * t_) << shift_;
  while (true) {
    int64_t y = SampleDiscreteLaplace(rng);
    uint128 magnitude = static_cast<uint128>(y < 0 ? -y : y);
    uint128 scaled = (magnitude * t_) << shift_;
    uint128 diff = scaled >= num_ ? scaled - num_ : num_ - scaled;
    bool accept;
    if (magnitude >= (static_cast<uint128>(1) << 40) || diff >= kSquareLimit) {
      accept = BernoulliExpUnbounded(rng);
    } else {
      accept = SampleBernoulliExp(diff * diff, den, rng);
    }
    if (accept) return y;
  }
}

int64_t SampleDiscreteGaussian(double sigma2, Rng& rng) {
  return DiscreteGaussianSampler::Create(sigma2).value().Sample(rng);
}

double SampleContinuousGaussian(double sigma2, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma2));
  return normal(rng);
}

}  // namespace dhdmm::dpnoise
