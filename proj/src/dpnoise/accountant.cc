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

#include "dhdmm/dpnoise/accountant.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "absl/strings/str_cat.h"
#include "dhdmm/status.h"

namespace dhdmm::dpnoise {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative slack applied to the final log-sum so kappa is never understated
// by rounding (a few ulps per term is far below this).
constexpr double kUpwardSlack = 1e-12;

}  // namespace

absl::Status PrivacyParams::Validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    return MakeError(ErrorKind::kInvalidConfig, "rho must be positive");
  }
  if (!(theta >= 0.0 && theta < 1.0)) {
    return MakeError(ErrorKind::kInvalidConfig, "theta must lie in [0, 1)");
  }
  if (n < 1) return MakeError(ErrorKind::kInvalidConfig, "n must be >= 1");
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) {
    return MakeError(ErrorKind::kInvalidConfig, "gamma must be >= 1");
  }
  if (!(delta2 >= 0.0) || !std::isfinite(delta2)) {
    return MakeError(ErrorKind::kInvalidConfig,
                     "sensitivity must be finite and nonnegative");
  }
  return absl::OkStatus();
}

int64_t HonestClients(const PrivacyParams& p) {
  // The epsilon absorbs representation error in products like 10 * 0.7.
  return static_cast<int64_t>(
      std::floor(static_cast<double>(p.n) * (1.0 - p.theta) + 1e-9));
}

double PerClientVariance(const PrivacyParams& p) {
  return p.gamma * p.gamma * p.delta2 * p.delta2 /
         (2.0 * (1.0 - p.theta) * static_cast<double>(p.n) * p.rho);
}

double KappaValue::log10() const { return log_value / std::numbers::ln10; }

KappaValue KappaForHonestCount(double per_client_sigma2, int64_t honest) {
  KappaValue out;
  out.terms = std::max<int64_t>(0, honest - 1);
  if (out.terms == 0) {
    out.log_value = -kInf;
    out.value = 0.0;
    return out;
  }
  const double c = 4.0 * std::numbers::pi * std::numbers::pi *
                   per_client_sigma2;
  // Factor out the k = 1 term, the largest: exponent -c/2.
  const double lead = -c / 2.0;
  double sum = 0.0, compensation = 0.0;
  for (int64_t k = 1; k <= out.terms; ++k) {
    double kd = static_cast<double>(k);
    double rel = -c * (kd / (kd + 1.0) - 0.5);
    double term = std::exp(rel);
    if (term == 0.0) break;  // later terms are smaller still
    // Neumaier summation.
    double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      compensation += (sum - t) + term;
    } else {
      compensation += (term - t) + sum;
    }
    sum = t;
  }
  sum += compensation;
  double log_value = std::log(5.0) + lead + std::log(sum);
  log_value += kUpwardSlack * std::abs(log_value);
  out.log_value = std::nextafter(log_value, kInf);
  out.value = std::exp(out.log_value);
  out.underflow = out.value == 0.0 || !std::isnormal(out.value);
  if (out.underflow) out.value = 0.0;
  return out;
}

KappaValue Kappa(const PrivacyParams& p) {
  return KappaForHonestCount(PerClientVariance(p), HonestClients(p));
}

double ZcdpToEpsilon(double rho, double delta) {
  return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

double EpsilonToZcdp(double epsilon, double delta) {
  double l = std::log(1.0 / delta);
  double root = std::sqrt(l + epsilon) - std::sqrt(l);
  return root * root;
}

double ComposeZcdp(std::span<const double> rhos) {
  double total = 0.0;
  for (double r : rhos) total += r;
  return total;
}

PrivacyReport Account(const PrivacyParams& p, double delta) {
  PrivacyReport report;
  report.rho = p.rho;
  report.delta = delta;
  report.honest_clients = HonestClients(p);
  report.per_client_sigma2 = PerClientVariance(p);
  report.noise_free = p.delta2 == 0.0;
  KappaValue kappa = report.noise_free
                         ? KappaForHonestCount(0.0, 0)
                         : KappaForHonestCount(report.per_client_sigma2,
                                               report.honest_clients);
  report.kappa = kappa.value;
  report.log10_kappa = kappa.log10();
  report.kappa_underflow = kappa.underflow;
  report.rho_prime = p.rho + kappa.value;
  report.epsilon = ZcdpToEpsilon(report.rho_prime, delta);
  report.realized_honest_clients = report.honest_clients;
  report.realized_rho_prime = report.rho_prime;
  report.realized_epsilon = report.epsilon;
  return report;
}

PrivacyReport AccountRealized(const PrivacyParams& p, double delta,
                              int64_t survivors) {
  PrivacyReport report = Account(p, delta);
  const int64_t corrupted = p.n - report.honest_clients;
  const int64_t realized = std::max<int64_t>(0, survivors - corrupted);
  report.realized_honest_clients = realized;
  if (report.noise_free) return report;
  if (realized == 0) {
    report.realized_rho_prime = kInf;
    report.realized_epsilon = kInf;
    report.exceeds_target = true;
    return report;
  }
  // Gaussian part: sensitivity (gamma delta2)^2 over realized * sigma2.
  double gaussian = p.gamma * p.gamma * p.delta2 * p.delta2 /
                    (2.0 * static_cast<double>(realized) *
                     report.per_client_sigma2);
  KappaValue kappa = KappaForHonestCount(report.per_client_sigma2, realized);
  report.realized_rho_prime = gaussian + kappa.value;
  report.realized_epsilon = ZcdpToEpsilon(report.realized_rho_prime, delta);
  report.exceeds_target =
      report.realized_rho_prime > report.rho_prime * (1.0 + 1e-12);
  return report;
}

nlohmann::json ToJson(const PrivacyReport& r) {
  auto finite_or_null = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  return nlohmann::json{
      {"rho", r.rho},
      {"rho_prime", r.rho_prime},
      {"kappa", r.kappa},
      {"log10_kappa", finite_or_null(r.log10_kappa)},
      {"kappa_underflow", r.kappa_underflow},
      {"epsilon", r.epsilon},
      {"delta", r.delta},
      {"per_client_sigma2", r.per_client_sigma2},
      {"honest_clients", r.honest_clients},
      {"noise_free", r.noise_free},
      {"realized_honest_clients", r.realized_honest_clients},
      {"realized_rho_prime", finite_or_null(r.realized_rho_prime)},
      {"realized_epsilon", finite_or_null(r.realized_epsilon)},
      {"exceeds_target", r.exceeds_target},
  };
}

}  // namespace dhdmm::dpnoise
