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
#include <numbers>

#include "gtest/gtest.h"

namespace dhdmm::dpnoise {
namespace {

PrivacyParams Params(double rho, int64_t n, double theta, double gamma,
                     double delta2) {
  PrivacyParams p;
  p.rho = rho;
  p.n = n;
  p.theta = theta;
  p.gamma = gamma;
  p.delta2 = delta2;
  return p;
}

// Plain double summation of the kappa series; valid where nothing
// underflows.
double NaiveKappa(const PrivacyParams& p) {
  double sigma2 = p.gamma * p.gamma * p.delta2 * p.delta2 /
                  (2 * (1 - p.theta) * p.n * p.rho);
  int64_t h = static_cast<int64_t>(std::floor(p.n * (1 - p.theta) + 1e-9));
  double sum = 0;
  for (int64_t k = 1; k < h; ++k) {
    sum += std::exp(-4 * std::numbers::pi * std::numbers::pi * sigma2 * k /
                    (k + 1.0));
  }
  return 5 * sum;
}

TEST(PrivacyParamsTest, Validate) {
  EXPECT_TRUE(Params(0.1, 10, 0, 100, 1).Validate().ok());
  EXPECT_FALSE(Params(0, 10, 0, 100, 1).Validate().ok());
  EXPECT_FALSE(Params(0.1, 10, 1.0, 100, 1).Validate().ok());
  EXPECT_FALSE(Params(0.1, 10, -0.1, 100, 1).Validate().ok());
  EXPECT_FALSE(Params(0.1, 0, 0, 100, 1).Validate().ok());
  EXPECT_FALSE(Params(0.1, 10, 0, 0.5, 1).Validate().ok());
  EXPECT_FALSE(Params(0.1, 10, 0, 100, -1).Validate().ok());
}

TEST(PerClientVarianceTest, Examples) {
  EXPECT_DOUBLE_EQ(PerClientVariance(Params(0.5, 1, 0, 1, 1)), 1.0);
  EXPECT_DOUBLE_EQ(PerClientVariance(Params(0.1, 5000, 0, 100, 1)), 10.0);
  EXPECT_DOUBLE_EQ(PerClientVariance(Params(0.1, 5000, 0.5, 100, 1)),
                   2 * PerClientVariance(Params(0.1, 5000, 0, 100, 1)));
  EXPECT_EQ(PerClientVariance(Params(0.1, 5000, 0, 100, 0)), 0.0);
}

TEST(PerClientVarianceTest, AlgebraicIdentity) {
  for (double rho : {0.01, 0.3, 2.0}) {
    for (double theta : {0.0, 0.1, 0.45}) {
      for (int64_t n : {1, 37, 1000}) {
        for (double gamma : {1.0, 64.0, 1e4}) {
          PrivacyParams p = Params(rho, n, theta, gamma, 1.7);
          double lhs = PerClientVariance(p) * 2 * (1 - theta) * n * rho;
          double rhs = gamma * gamma * 1.7 * 1.7;
          EXPECT_NEAR(lhs / rhs, 1.0, 1e-12);
        }
      }
    }
  }
}

TEST(HonestClientsTest, FloorsWithRepresentationSlack) {
  EXPECT_EQ(HonestClients(Params(1, 10, 0.3, 1, 1)), 7);
  EXPECT_EQ(HonestClients(Params(1, 10, 0.25, 1, 1)), 7);
  EXPECT_EQ(HonestClients(Params(1, 1000, 0.05, 1, 1)), 950);
  EXPECT_EQ(HonestClients(Params(1, 1, 0, 1, 1)), 1);
}

TEST(KappaTest, ReferenceExample) {
  KappaValue k = Kappa(Params(0.1, 5000, 0, 100, 1));
  EXPECT_NEAR(k.value / 9.39e-86, 1.0, 0.01);
  EXPECT_FALSE(k.underflow);
}

// Reference values from 50-digit evaluation of the series.
TEST(KappaTest, HighPrecisionReferenceValues) {
  EXPECT_NEAR(Kappa(Params(0.1, 5000, 0, 100, 1)).value / 9.3902e-86, 1.0,
              1e-4);
  EXPECT_NEAR(Kappa(Params(0.5, 10, 0, 3, 1)).value / 9.6569993e-8, 1.0,
              1e-7);
  EXPECT_NEAR(Kappa(Params(1, 4, 0.25, 2, 1.5)).value / 6.9190788e-13, 1.0,
              1e-7);
  EXPECT_NEAR(Kappa(Params(0.1, 5000, 0, 1000, 1)).log10(), -8571.93, 0.01);
}

TEST(KappaTest, MatchesNaiveSumAndNeverUnderstates) {
  for (double rho : {0.5, 1.0, 4.0}) {
    for (int64_t n : {2, 5, 30, 200}) {
      for (double gamma : {1.0, 2.0, 3.0}) {
        PrivacyParams p = Params(rho, n, 0, gamma, 1);
        double naive = NaiveKappa(p);
        if (naive < 1e-290) continue;
        double k = Kappa(p).value;
        EXPECT_GE(k, naive);
        EXPECT_NEAR(k / naive, 1.0, 1e-9);
      }
    }
  }
}

TEST(KappaTest, EmptySumIsZero) {
  KappaValue k = Kappa(Params(0.1, 1, 0, 100, 1));
  EXPECT_EQ(k.value, 0.0);
  EXPECT_EQ(k.terms, 0);
  EXPECT_TRUE(std::isinf(k.log_value));
}

TEST(KappaTest, UnderflowReportedAsLog) {
  KappaValue k = Kappa(Params(0.1, 5000, 0, 1000, 1));
  EXPECT_TRUE(k.underflow);
  EXPECT_EQ(k.value, 0.0);
  EXPECT_LT(k.log10(), -300);
}

TEST(KappaTest, MonotoneDecreasingInGammaAndVariance) {
  double prev = INFINITY;
  for (double gamma : {1.0, 1.5, 2.0, 4.0, 10.0, 100.0, 1000.0}) {
    double lv = Kappa(Params(0.5, 50, 0, gamma, 1)).log_value;
    EXPECT_LT(lv, prev);
    prev = lv;
  }
  prev = INFINITY;
  for (double s2 : {0.01, 0.1, 1.0, 10.0, 1e3, 1e6}) {
    double lv = KappaForHonestCount(s2, 100).log_value;
    EXPECT_LT(lv, prev);
    prev = lv;
  }
}

TEST(ConversionTest, ZcdpToEpsilon) {
  EXPECT_NEAR(ZcdpToEpsilon(0.1, 1e-5), 2.2459660262893, 1e-12);
  EXPECT_EQ(ZcdpToEpsilon(0.0, 1e-5), 0.0);
}

TEST(ConversionTest, RoundTrip) {
  for (double eps : {0.1, 1.0, 2.0, 5.0}) {
    for (double delta : {1e-3, 1e-5, 1e-9}) {
      EXPECT_NEAR(ZcdpToEpsilon(EpsilonToZcdp(eps, delta), delta), eps, 1e-10);
    }
  }
}

TEST(ConversionTest, Monotonicity) {
  EXPECT_LT(ZcdpToEpsilon(0.1, 1e-5), ZcdpToEpsilon(0.2, 1e-5));
  EXPECT_GT(ZcdpToEpsilon(0.1, 1e-6), ZcdpToEpsilon(0.1, 1e-5));
}

TEST(ConversionTest, Composition) {
  const double rhos[] = {0.1, 0.25, 0.05};
  EXPECT_DOUBLE_EQ(ComposeZcdp(rhos), 0.4);
}

TEST(AccountTest, ReferenceParams) {
  PrivacyReport r = Account(Params(0.1, 5000, 0, 100, 1), 1e-5);
  EXPECT_EQ(r.rho_prime, 0.1 + r.kappa);
  EXPECT_NEAR(r.kappa / 9.39e-86, 1.0, 0.01);
  EXPECT_NEAR(r.epsilon, 2.2460, 1e-4);
  EXPECT_DOUBLE_EQ(r.per_client_sigma2, 10.0);
  EXPECT_EQ(r.honest_clients, 5000);
  EXPECT_FALSE(r.noise_free);
}

TEST(AccountTest, NoiseFreeWhenSensitivityZero) {
  PrivacyReport r = Account(Params(0.1, 100, 0, 100, 0), 1e-5);
  EXPECT_TRUE(r.noise_free);
  EXPECT_EQ(r.kappa, 0.0);
  EXPECT_EQ(r.per_client_sigma2, 0.0);
}

TEST(AccountTest, RealizedWithDropouts) {
  PrivacyParams p = Params(0.1, 100, 0.1, 100, 1);
  PrivacyReport full = AccountRealized(p, 1e-5, 100);
  EXPECT_EQ(full.realized_honest_clients, 90);
  EXPECT_NEAR(full.realized_rho_prime, full.rho_prime, 1e-15);
  EXPECT_FALSE(full.exceeds_target);

  PrivacyReport dropped = AccountRealized(p, 1e-5, 95);
  EXPECT_EQ(dropped.realized_honest_clients, 85);
  EXPECT_NEAR(dropped.realized_rho_prime, 0.1 * 90 / 85, 1e-12);
  EXPECT_TRUE(dropped.exceeds_target);

  PrivacyReport none = AccountRealized(p, 1e-5, 5);
  EXPECT_EQ(none.realized_honest_clients, 0);
  EXPECT_TRUE(std::isinf(none.realized_rho_prime));
}

TEST(AccountTest, JsonCarriesLogKappa) {
  nlohmann::json j = ToJson(Account(Params(0.1, 5000, 0, 1000, 1), 1e-5));
  EXPECT_TRUE(j["kappa_underflow"].get<bool>());
  EXPECT_NEAR(j["log10_kappa"].get<double>(), -8571.93, 0.01);
  EXPECT_EQ(j["kappa"].get<double>(), 0.0);
  EXPECT_TRUE(j.contains("epsilon"));
  EXPECT_TRUE(j.contains("per_client_sigma2"));
}

}  // namespace
}  // namespace dhdmm::dpnoise
