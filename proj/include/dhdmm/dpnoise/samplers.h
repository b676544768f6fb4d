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

#ifndef DHDMM_DPNOISE_SAMPLERS_H_
#define DHDMM_DPNOISE_SAMPLERS_H_

#include <cstdint>

#include "absl/status/statusor.h"
#include "dhdmm/random.h"

namespace dhdmm::dpnoise {

using uint128 = unsigned __int128;

// Exact Bernoulli(exp(-num/den)) using only integer arithmetic and uniform
// draws. Requires den > 0.
bool SampleBernoulliExp(uint128 num, uint128 den, Rng& rng);

// Exact discrete Gaussian over the integers, P[z] proportional to
// exp(-z^2 / (2 sigma2)). Rejection sampling from a discrete Laplace
// proposal; no floating point on the sampling path.
//
// sigma2 is held as the rational num / 2^shift, rounded up from the requested
// double (at most one part in 2^40 of extra variance), so the sampled
// distribution never has less noise than requested.
class DiscreteGaussianSampler {
 public:
  // Supports 0 < sigma2 <= 2^50.
  static absl::StatusOr<DiscreteGaussianSampler> Create(double sigma2);

  int64_t Sample(Rng& rng) const;

  // The exact variance parameter being sampled, num / 2^shift.
  double effective_sigma2() const;

 private:
  DiscreteGaussianSampler(uint64_t num, int shift, uint64_t t)
      : num_(num), shift_(shift), t_(t) {}

  int64_t SampleDiscreteLaplace(Rng& rng) const;

  uint64_t num_;  // sigma2 = num_ / 2^shift_
  int shift_;
  uint64_t t_;    // floor(sigma) + 1, the Laplace scale
};

// Convenience wrapper; sigma2 must satisfy Create's precondition.
int64_t SampleDiscreteGaussian(double sigma2, Rng& rng);

// Continuous N(0, sigma2); used only by the central and local baselines.
double SampleContinuousGaussian(double sigma2, Rng& rng);

}  // namespace dhdmm::dpnoise

#endif  // DHDMM_DPNOISE_SAMPLERS_H_
