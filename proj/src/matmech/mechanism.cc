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

#include "dhdmm/matmech/mechanism.h"

#include <cmath>

#include "absl/strings/str_cat.h"
#include "dhdmm/status.h"

namespace dhdmm::matmech {
namespace {

absl::Status CheckFinite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat(what, " contains non-finite entries"));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<Workload> Workload::Create(Matrix matrix, DomainSpec domain) {
  if (matrix.cols() != domain.size()) {
    return MakeError(ErrorKind::kDimensionError,
                     absl::StrCat("workload has ", matrix.cols(),
                                  " columns but the domain has ",
                                  domain.size(), " cells"));
  }
  if (matrix.rows() == 0 || (matrix.array() == 0.0).all()) {
    return MakeError(ErrorKind::kInvalidConfig, "workload is all zero");
  }
  DHDMM_RETURN_IF_ERROR(CheckFinite(matrix, "workload"));
  return Workload(std::move(matrix), std::move(domain));
}

absl::StatusOr<Strategy> Strategy::Create(Matrix matrix, DomainSpec domain) {
  if (matrix.cols() != domain.size()) {
    return MakeError(ErrorKind::kDimensionError,
                     absl::StrCat("strategy has ", matrix.cols(),
                                  " columns but the domain has ",
                                  domain.size(), " cells"));
  }
  DHDMM_RETURN_IF_ERROR(CheckFinite(matrix, "strategy"));
  if (NumericalRank(matrix) != matrix.cols()) {
    return MakeError(ErrorKind::kNotSupported,
                     "strategy does not have full column rank");
  }
  double sensitivity = Sensitivity(matrix);
  return Strategy(std::move(matrix), std::move(domain), sensitivity);
}

double Sensitivity(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.colwise().norm().maxCoeff();
}

int64_t NumericalRank(const Matrix& a) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  double cutoff = kRankTolerance * s(0);
  int64_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++rank;
  }
  return rank;
}

absl::StatusOr<Matrix> PseudoInverse(const Matrix& a) {
  if (a.size() == 0) {
    return MakeError(ErrorKind::kNotSupported, "empty strategy matrix");
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s.size() < a.cols() || s(0) == 0.0 ||
      s(a.cols() - 1) <= kRankTolerance * s(0)) {
    return MakeError(ErrorKind::kNotSupported,
                     "strategy is rank deficient; workload answers are not "
                     "reconstructable");
  }
  return svd.matrixV() * s.cwiseInverse().asDiagonal() *
         svd.matrixU().transpose();
}

absl::StatusOr<double> StrategyObjective(const Matrix& workload,
                                         const Matrix& strategy) {
  if (workload.cols() != strategy.cols()) {
    return MakeError(ErrorKind::kDimensionError,
                     "workload and strategy column counts differ");
  }
  Eigen::BDCSVD<Matrix> svd(strategy, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s.size() < strategy.cols() || s(0) == 0.0 ||
      s(strategy.cols() - 1) <= kRankTolerance * s(0)) {
    return MakeError(ErrorKind::kNotSupported,
                     "workload is not reconstructable from the strategy");
  }
  // ||W A^+||_F = ||W V S^-1||_F since U has orthonormal columns.
  double frob2 =
      (workload * svd.matrixV() * s.cwiseInverse().asDiagonal())
          .squaredNorm();
  double delta = Sensitivity(strategy);
  return delta * delta * frob2;
}

absl::StatusOr<Vector> Measure(const Matrix& strategy,
                               const HistogramVector& x) {
  if (static_cast<int64_t>(x.counts.size()) != strategy.cols()) {
    return MakeError(ErrorKind::kDimensionError,
                     absl::StrCat("histogram has length ", x.counts.size(),
                                  ", strategy expects ", strategy.cols()));
  }
  Vector m = Vector::Zero(strategy.rows());
  for (size_t j = 0; j < x.counts.size(); ++j) {
    if (x.counts[j] != 0) {
      m += static_cast<double>(x.counts[j]) * strategy.col(j);
    }
  }
  return m;
}

absl::StatusOr<Matrix> ReconstructionOperator(const Matrix& workload,
                                              const Matrix& strategy) {
  if (workload.cols() != strategy.cols()) {
    return MakeError(ErrorKind::kDimensionError,
                     "workload and strategy column counts differ");
  }
  DHDMM_ASSIGN_OR_RETURN(Matrix pinv, PseudoInverse(strategy));
  return workload * pinv;
}

absl::StatusOr<Vector> Reconstruct(const Matrix& workload,
                                   const Matrix& strategy,
                                   const Vector& measurements) {
  if (measurements.size() != strategy.rows()) {
    return MakeError(ErrorKind::kDimensionError,
                     absl::StrCat("got ", measurements.size(),
                                  " measurements for a strategy with ",
                                  strategy.rows(), " rows"));
  }
  DHDMM_ASSIGN_OR_RETURN(Matrix op, ReconstructionOperator(workload, strategy));
  return op * measurements;
}

absl::StatusOr<MeasurementPlan> MeasurementPlan::Create(Workload workload,
                                                       Strategy strategy) {
  if (!(workload.domain() == strategy.domain())) {
    return MakeError(ErrorKind::kDimensionError,
                     "workload and strategy domains differ");
  }
  DHDMM_ASSIGN_OR_RETURN(
      Matrix op, ReconstructionOperator(workload.matrix(), strategy.matrix()));
  return MeasurementPlan(std::move(workload), std::move(strategy),
                         std::move(op));
}

absl::StatusOr<Vector> MeasurementPlan::Answer(const Vector& measurements) const {
  if (measurements.size() != reconstruction_.cols()) {
    return MakeError(ErrorKind::kDimensionError,
                     absl::StrCat("got ", measurements.size(),
                                  " measurements for a strategy with ",
                                  reconstruction_.cols(), " rows"));
  }
  return Vector(reconstruction_ * measurements);
}

absl::StatusOr<Vector> MeasurementPlan::Exact(const HistogramVector& x) const {
  if (static_cast<int64_t>(x.counts.size()) != workload_.matrix().cols()) {
    return MakeError(ErrorKind::kDimensionError,
                     "histogram length differs from the workload domain");
  }
  Vector v(x.counts.size());
  for (size_t j = 0; j < x.counts.size(); ++j) {
    v(j) = static_cast<double>(x.counts[j]);
  }
  return Vector(workload_.matrix() * v);
}

}  // namespace dhdmm::matmech
