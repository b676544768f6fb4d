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

#ifndef DHDMM_DPNOISE_ACCOUNTANT_H_
#define DHDMM_DPNOISE_ACCOUNTANT_H_

#include <cstdint>
#include <span>

#include "absl/status/status.h"
#include "json.hpp"

namespace dhdmm::dpnoise {

struct PrivacyParams {
  double rho = 0.1;     // target zCDP
  double theta = 0.0;   // bound on the corrupted-client fraction, in [0, 1)
  int64_t n = 1;        // clients
  double gamma = 1000;  // fixed-point scaling factor
  double delta2 = 1.0;  // L2 sensitivity of the strategy

  absl::Status Validate() const;
};

// floor(n (1 - theta)): the noise shares that survive an adversary
// subtracting the corrupted clients' noise.
int64_t HonestClients(const PrivacyParams& p);

// gamma^2 delta2^2 / (2 (1 - theta) n rho). Zero when delta2 is zero.
double PerClientVariance(const PrivacyParams& p);

struct KappaValue {
  // Natural log of kappa; -infinity when the sum is empty.
  double log_value = 0.0;
  // exp(log_value), or 0 when that underflows a double.
  double value = 0.0;
  bool underflow = false;
  int64_t terms = 0;

  double log10() const;
};

// 5 * sum_{k=1}^{h-1} exp(-4 pi^2 sigma2 k / (k + 1)), evaluated in log
// space with compensated summation and rounded upward.
KappaValue KappaForHonestCount(double per_client_sigma2, int64_t honest);

// Discrete-noise penalty for the protocol: h = HonestClients(p) and
// sigma2 = PerClientVariance(p).
KappaValue Kappa(const PrivacyParams& p);

struct PrivacyReport {
  double rho = 0.0;
  double rho_prime = 0.0;
  double kappa = 0.0;
  double log10_kappa = 0.0;
  bool kappa_underflow = false;
  double epsilon = 0.0;
  double delta = 0.0;
  double per_client_sigma2 = 0.0;
  int64_t honest_clients = 0;
  // Set when delta2 == 0: the measurement is constant and no noise is added.
  bool noise_free = false;

  // Guarantee recomputed for the noise shares actually aggregated, with the
  // corrupted fraction still subtracted. Filled by AccountRealized.
  int64_t realized_honest_clients = 0;
  double realized_rho_prime = 0.0;
  double realized_epsilon = 0.0;
  bool exceeds_target = false;
};

// rho' = rho + kappa and its (epsilon, delta) conversion. 0 < delta < 1.
PrivacyReport Account(const PrivacyParams& p, double delta);

// As Account, additionally evaluating the guarantee when only `survivors`
// clients contributed noise (dropouts lose their noise shares).
PrivacyReport AccountRealized(const PrivacyParams& p, double delta,
                              int64_t survivors);

// rho-zCDP implies (rho + 2 sqrt(rho ln(1/delta)), delta)-DP.
double ZcdpToEpsilon(double rho, double delta);
// Smallest rho whose conversion at delta gives epsilon.
double EpsilonToZcdp(double epsilon, double delta);
// zCDP composes additively.
double ComposeZcdp(std::span<const double> rhos);

nlohmann::json ToJson(const PrivacyReport& report);

}  // namespace dhdmm::dpnoise

#endif  // DHDMM_DPNOISE_ACCOUNTANT_H_
