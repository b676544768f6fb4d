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

#ifndef DHDMM_BASELINES_BASELINES_H_
#define DHDMM_BASELINES_BASELINES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dhdmm/matmech/domain.h"
#include "dhdmm/matmech/mechanism.h"
#include "dhdmm/matmech/optimizer.h"

namespace dhdmm::baselines {

using matmech::Record;
using matmech::Vector;

struct UtilityResult {
  std::string mechanism;  // "central", "local" or "distributed"
  Vector answers;
  double rmse = 0.0;  // against the exact answers W x
  double rho = 0.0;
  double epsilon = 0.0;  // rho converted at the caller's delta
};

// sqrt(mean((a - b)^2)). DimensionError on a length mismatch.
absl::StatusOr<double> Rmse(std::span<const double> answers,
                            std::span<const double> exact);
absl::StatusOr<double> Rmse(const Vector& answers, const Vector& exact);

// Central-model HDMM: the curator measures A x for the pooled records, adds
// continuous N(0, Delta^2 / (2 rho)) to every coordinate and reconstructs.
absl::StatusOr<UtilityResult> CentralHdmm(const matmech::MeasurementPlan& plan,
                                          std::span<const Record> records,
                                          double rho, uint64_t seed,
                                          double delta = 1e-5);
// Optimizes the strategy first, with `config`.
absl::StatusOr<UtilityResult> CentralHdmm(
    const matmech::Workload& workload, std::span<const Record> records,
    double rho, uint64_t seed, const matmech::OptimizerConfig& config = {},
    double delta = 1e-5);

// Local-model comparator: every client perturbs its own measurement with
// the full central-scale noise N(0, Delta^2 / (2 rho)), and the server sums
// the noisy measurements in the clear, so the aggregate noise variance is
// n Delta^2 / (2 rho) per coordinate.
absl::StatusOr<UtilityResult> LocalGaussian(
    const matmech::MeasurementPlan& plan,
    const std::vector<std::vector<Record>>& clients, double rho, uint64_t seed,
    double delta = 1e-5);

}  // namespace dhdmm::baselines

#endif  // DHDMM_BASELINES_BASELINES_H_
