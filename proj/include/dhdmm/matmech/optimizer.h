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

#ifndef DHDMM_MATMECH_OPTIMIZER_H_
#define DHDMM_MATMECH_OPTIMIZER_H_

#include <cstdint>
#include <string>

#include "absl/status/statusor.h"
#include "dhdmm/matmech/mechanism.h"

namespace dhdmm::matmech {

struct OptimizerConfig {
  // Projected gradient steps per start. Zero skips the search and returns the
  // better of the identity and row-normalized workload candidates.
  int iterations = 150;
  // Extra weighted rows appended to the identity; 0 picks ceil(d / 16).
  int extra_rows = 0;
  // Random starting points for the extra-row weights.
  int restarts = 1;
  double initial_step = 0.5;
  uint64_t seed = 0;
};

struct OptimizationReport {
  Strategy strategy;
  double objective = 0.0;
  // "identity", "normalized_workload" or "p_identity".
  std::string chosen;
  double identity_objective = 0.0;
  // Unset (NaN) when the workload lacks full column rank.
  double normalized_workload_objective = 0.0;
  int iterations_run = 0;
  // Rough floating-point operation count, for simulated compute time.
  double flops = 0.0;
};

// Searches the p-Identity family A = [I; T] D (D normalizes columns to unit
// norm, T >= 0) by projected gradient descent on StrategyObjective, and keeps
// the best of that and the two fixed candidates. Deterministic in seed.
absl::StatusOr<OptimizationReport> OptimizeStrategyWithReport(
    const Workload& workload, const OptimizerConfig& config);

absl::StatusOr<Strategy> OptimizeStrategy(const Workload& workload,
                                          const OptimizerConfig& config);

// p-Identity objective and its gradient in T, exposed for testing.
struct PIdentityEval {
  double objective = 0.0;
  Matrix gradient;
};
absl::StatusOr<PIdentityEval> EvaluatePIdentity(const Matrix& gram,
                                                const Matrix& weights,
                                                bool with_gradient);
Matrix PIdentityStrategy(const Matrix& weights);

}  // namespace dhdmm::matmech

#endif  // DHDMM_MATMECH_OPTIMIZER_H_
