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

#ifndef DHDMM_MATMECH_MECHANISM_H_
#define DHDMM_MATMECH_MECHANISM_H_

#include <Eigen/Dense>

#include "absl/status/statusor.h"
#include "dhdmm/matmech/domain.h"

namespace dhdmm::matmech {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative singular-value cutoff for numerical rank decisions.
inline constexpr double kRankTolerance = 1e-9;

// Dense q x d matrix of linear queries over a flattened domain.
class Workload {
 public:
  static absl::StatusOr<Workload> Create(Matrix matrix, DomainSpec domain);

  const Matrix& matrix() const { return matrix_; }
  const DomainSpec& domain() const { return domain_; }
  int64_t num_queries() const { return matrix_.rows(); }

 private:
  Workload(Matrix matrix, DomainSpec domain)
      : matrix_(std::move(matrix)), domain_(std::move(domain)) {}

  Matrix matrix_;
  DomainSpec domain_;
};

// k x d measurement matrix with full column rank, plus its L2 sensitivity.
class Strategy {
 public:
  static absl::StatusOr<Strategy> Create(Matrix matrix, DomainSpec domain);

  const Matrix& matrix() const { return matrix_; }
  const DomainSpec& domain() const { return domain_; }
  double sensitivity() const { return sensitivity_; }
  int64_t num_rows() const { return matrix_.rows(); }

 private:
  Strategy(Matrix matrix, DomainSpec domain, double sensitivity)
      : matrix_(std::move(matrix)),
        domain_(std::move(domain)),
        sensitivity_(sensitivity) {}

  Matrix matrix_;
  DomainSpec domain_;
  double sensitivity_;
};

// Maximum column L2 norm: one added record moves Ax by exactly one column.
double Sensitivity(const Matrix& a);

// Numerical rank with the kRankTolerance * sigma_max cutoff.
int64_t NumericalRank(const Matrix& a);

// Moore-Penrose pseudo-inverse of a full-column-rank matrix; NotSupported
// otherwise.
absl::StatusOr<Matrix> PseudoInverse(const Matrix& a);

// Expected total squared reconstruction error at unit noise scale:
// sensitivity(A)^2 * ||W A^+||_F^2. Invariant under positive scaling of A.
absl::StatusOr<double> StrategyObjective(const Matrix& workload,
                                         const Matrix& strategy);

absl::StatusOr<Vector> Measure(const Matrix& strategy,
                               const HistogramVector& x);

// W A^+, the linear map from strategy answers to workload answers.
absl::StatusOr<Matrix> ReconstructionOperator(const Matrix& workload,
                                              const Matrix& strategy);

// Least-squares workload answers W A^+ M.
absl::StatusOr<Vector> Reconstruct(const Matrix& workload,
                                   const Matrix& strategy,
                                   const Vector& measurements);

// A workload, a strategy, and the operator W A^+ between them, for answering
// many measurement vectors under one strategy.
class MeasurementPlan {
 public:
  static absl::StatusOr<MeasurementPlan> Create(Workload workload,
                                                Strategy strategy);

  const Workload& workload() const { return workload_; }
  const Strategy& strategy() const { return strategy_; }
  const Matrix& reconstruction() const { return reconstruction_; }

  // Same result, bit for bit, as Reconstruct(W, A, measurements).
  absl::StatusOr<Vector> Answer(const Vector& measurements) const;
  // Exact workload answers W x.
  absl::StatusOr<Vector> Exact(const HistogramVector& x) const;

 private:
  MeasurementPlan(Workload workload, Strategy strategy, Matrix reconstruction)
      : workload_(std::move(workload)),
        strategy_(std::move(strategy)),
        reconstruction_(std::move(reconstruction)) {}

  Workload workload_;
  Strategy strategy_;
  Matrix reconstruction_;
};

}  // namespace dhdmm::matmech

#endif  // DHDMM_MATMECH_MECHANISM_H_
