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

#include "dhdmm/baselines/baselines.h"

#include <cmath>

#include "absl/strings/str_cat.h"
#include "dhdmm/dpnoise/accountant.h"
#include "dhdmm/dpnoise/samplers.h"
#include "dhdmm/random.h"
#include "dhdmm/status.h"

namespace dhdmm::baselines {
namespace {

using matmech::HistogramVector;
using matmech::MeasurementPlan;

absl::Status CheckRho(double rho) {
  if (!(rho > 0.0)) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat("rho must be positive, got ", rho));
  }
  return absl::OkStatus();
}

absl::StatusOr<UtilityResult> Finish(const MeasurementPlan& plan,
                                     const std::string& tag,
                                     const Vector& noisy,
                                     const HistogramVector& pooled, double rho,
                                     double delta) {
  UtilityResult out;
  out.mechanism = tag;
  DHDMM_ASSIGN_OR_RETURN(out.answers, plan.Answer(noisy));
  DHDMM_ASSIGN_OR_RETURN(Vector exact, plan.Exact(pooled));
  DHDMM_ASSIGN_OR_RETURN(out.rmse, Rmse(out.answers, exact));
  out.rho = rho;
  out.epsilon = dpnoise::ZcdpToEpsilon(rho, delta);
  return out;
}

}  // namespace

absl::StatusOr<double> Rmse(std::span<const double> answers,
                            std::span<const double> exact) {
  if (answers.size() != exact.size()) {
    return MakeError(ErrorKind::kDimensionError,
                     absl::StrCat("rmse of vectors with lengths ",
                                  answers.size(), " and ", exact.size()));
  }
  if (answers.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < answers.size(); ++i) {
    double e = answers[i] - exact[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(answers.size()));
}

absl::StatusOr<double> Rmse(const Vector& answers, const Vector& exact) {
  return Rmse(std::span<const double>(answers.data(), answers.size()),
              std::span<const double>(exact.data(), exact.size()));
}

absl::StatusOr<UtilityResult> CentralHdmm(const MeasurementPlan& plan,
                                          std::span<const Record> records,
                                          double rho, uint64_t seed,
                                          double delta) {
  DHDMM_RETURN_IF_ERROR(CheckRho(rho));
  DHDMM_ASSIGN_OR_RETURN(HistogramVector x,
                         matmech::Vectorize(records, plan.workload().domain()));
  DHDMM_ASSIGN_OR_RETURN(Vector m,
                         matmech::Measure(plan.strategy().matrix(), x));
  const double s = plan.strategy().sensitivity();
  const double sigma2 = s * s / (2.0 * rho);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m(i) += dpnoise::SampleContinuousGaussian(sigma2, rng);
  }
  return Finish(plan, "central", m, x, rho, delta);
}

absl::StatusOr<UtilityResult> CentralHdmm(
    const matmech::Workload& workload, std::span<const Record> records,
    double rho, uint64_t seed, const matmech::OptimizerConfig& config,
    double delta) {
  DHDMM_ASSIGN_OR_RETURN(matmech::Strategy strategy,
                         matmech::OptimizeStrategy(workload, config));
  DHDMM_ASSIGN_OR_RETURN(MeasurementPlan plan,
                         MeasurementPlan::Create(workload, std::move(strategy)));
  return CentralHdmm(plan, records, rho, seed, delta);
}

absl::StatusOr<UtilityResult> LocalGaussian(
    const MeasurementPlan& plan,
    const std::vector<std::vector<Record>>& clients, double rho, uint64_t seed,
    double delta) {
  DHDMM_RETURN_IF_ERROR(CheckRho(rho));
  const auto& domain = plan.workload().domain();
  const matmech::Matrix& a = plan.strategy().matrix();
  const double s = plan.strategy().sensitivity();
  const double sigma2 = s * s / (2.0 * rho);
  Rng root(seed);
  Vector sum = Vector::Zero(a.rows());
  HistogramVector pooled{std::vector<int64_t>(domain.size(), 0)};
  for (size_t i = 0; i < clients.size(); ++i) {
    DHDMM_ASSIGN_OR_RETURN(HistogramVector x,
                           matmech::Vectorize(clients[i], domain));
    DHDMM_ASSIGN_OR_RETURN(Vector m, matmech::Measure(a, x));
    Rng rng = root.Derive("local.client", i);
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      m(j) += dpnoise::SampleContinuousGaussian(sigma2, rng);
    }
    sum += m;
    for (size_t j = 0; j < x.counts.size(); ++j) pooled.counts[j] += x.counts[j];
  }
  return Finish(plan, "local", sum, pooled, rho, delta);
}

}  // namespace dhdmm::baselines
