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

#include "dhdmm/matmech/optimizer.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/strings/str_cat.h"
#include "dhdmm/random.h"
#include "dhdmm/status.h"

namespace dhdmm::matmech {
namespace {

struct Candidate {
  Matrix matrix;
  double objective = std::numeric_limits<double>::infinity();
  std::string name;
};

Matrix RowNormalized(const Matrix& w) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    if (w.row(i).norm() > 0.0) keep.push_back(i);
  }
  Matrix out(static_cast<Eigen::Index>(keep.size()), w.cols());
  for (size_t r = 0; r < keep.size(); ++r) {
    out.row(r) = w.row(keep[r]) / w.row(keep[r]).norm();
  }
  return out;
}

}  // namespace

absl::StatusOr<PIdentityEval> EvaluatePIdentity(const Matrix& gram,
                                                const Matrix& weights,
                                                bool with_gradient) {
  const Eigen::Index d = gram.rows();
  Matrix x = Matrix::Identity(d, d);
  x.noalias() += weights.transpose() * weights;
  Vector c = x.diagonal().cwiseSqrt();
  Matrix m = (c * c.transpose()).cwiseProduct(gram);
  Eigen::LLT<Matrix> llt(x);
  if (llt.info() != Eigen::Success) {
    return MakeError(ErrorKind::kOptimizationFailed,
                     "p-Identity Gram matrix is not positive definite");
  }
  Matrix y = llt.solve(Matrix::Identity(d, d));
  PIdentityEval eval;
  eval.objective = y.cwiseProduct(m).sum();
  if (with_gradient) {
    Matrix h = y * m * y;
    Vector u = y.cwiseProduct(gram) * c;
    Vector scale = u.cwiseQuotient(c);
    eval.gradient = -2.0 * weights * h + 2.0 * weights * scale.asDiagonal();
  }
  return eval;
}

Matrix PIdentityStrategy(const Matrix& weights) {
  const Eigen::Index d = weights.cols();
  Matrix a(d + weights.rows(), d);
  a.topRows(d).setIdentity();
  a.bottomRows(weights.rows()) = weights;
  Vector norms = a.colwise().norm().transpose();
  return a * norms.cwiseInverse().asDiagonal();
}

absl::StatusOr<OptimizationReport> OptimizeStrategyWithReport(
    const Workload& workload, const OptimizerConfig& config) {
  const Matrix& w = workload.matrix();
  const Eigen::Index d = w.cols();
  const double dd = static_cast<double>(d);
  double flops = 0.0;

  std::vector<Candidate> candidates;
  Candidate identity{Matrix::Identity(d, d), 0.0, "identity"};
  DHDMM_ASSIGN_OR_RETURN(identity.objective, StrategyObjective(w, identity.matrix));
  flops += 4.0 * dd * dd * dd;
  const double identity_objective = identity.objective;
  candidates.push_back(std::move(identity));

  double normalized_objective = std::numeric_limits<double>::quiet_NaN();
  Matrix normalized = RowNormalized(w);
  if (normalized.rows() >= d && NumericalRank(normalized) == d) {
    absl::StatusOr<double> obj = StrategyObjective(w, normalized);
    if (obj.ok()) {
      normalized_objective = *obj;
      candidates.push_back({std::move(normalized), *obj, "normalized_workload"});
    }
  }

  int iterations_run = 0;
  if (config.iterations > 0 && config.restarts > 0) {
    const int p = config.extra_rows > 0
                      ? config.extra_rows
                      : std::max<int>(1, static_cast<int>((d + 15) / 16));
    const Matrix gram = w.transpose() * w;
    const double eval_flops =
        static_cast<double>(p) * dd * dd + dd * dd * dd;
    const double grad_flops = 2.0 * dd * dd * dd + 2.0 * p * dd * dd;
    Rng root(config.seed);
    for (int restart = 0; restart < config.restarts; ++restart) {
      Rng rng = root.Derive("p_identity_start", restart);
      Matrix weights(p, d);
      for (Eigen::Index i = 0; i < weights.size(); ++i) {
        weights.data()[i] = rng.UniformDouble();
      }
      DHDMM_ASSIGN_OR_RETURN(PIdentityEval current,
                             EvaluatePIdentity(gram, weights, true));
      flops += eval_flops + grad_flops;
      double grad_norm = current.gradient.norm();
      double step = grad_norm > 0.0
                        ? config.initial_step * weights.norm() / grad_norm
                        : 0.0;
      for (int it = 0; it < config.iterations && step > 0.0; ++it) {
        ++iterations_run;
        Matrix trial = (weights - step * current.gradient).cwiseMax(0.0);
        DHDMM_ASSIGN_OR_RETURN(PIdentityEval next,
                               EvaluatePIdentity(gram, trial, false));
        flops += eval_flops;
        if (!std::isfinite(next.objective)) {
          return MakeError(ErrorKind::kOptimizationFailed,
                           "objective became non-finite");
        }
        if (next.objective < current.objective) {
          weights = std::move(trial);
          DHDMM_ASSIGN_OR_RETURN(current,
                                 EvaluatePIdentity(gram, weights, true));
          flops += eval_flops + grad_flops;
          step *= 1.25;
        } else {
          step *= 0.5;
          if (step < 1e-14 * std::max(1.0, weights.norm())) break;
        }
      }
      Matrix strategy = PIdentityStrategy(weights);
      absl::StatusOr<double> obj = StrategyObjective(w, strategy);
      flops += 4.0 * dd * dd * dd;
      if (obj.ok()) {
        candidates.push_back({std::move(strategy), *obj, "p_identity"});
      }
    }
  }

  const Candidate* best = &candidates.front();
  for (const Candidate& c : candidates) {
    if (c.objective < best->objective) best = &c;
  }
  if (!std::isfinite(best->objective) || best->objective <= 0.0) {
    return MakeError(ErrorKind::kOptimizationFailed,
                     absl::StrCat("best objective is ", best->objective));
  }
  DHDMM_ASSIGN_OR_RETURN(Strategy strategy,
                         Strategy::Create(best->matrix, workload.domain()));
  return OptimizationReport{std::move(strategy), best->objective, best->name,
                            identity_objective,  normalized_objective,
                            iterations_run,      flops};
}

absl::StatusOr<Strategy> OptimizeStrategy(const Workload& workload,
                                          const OptimizerConfig& config) {
  DHDMM_ASSIGN_OR_RETURN(OptimizationReport report,
                         OptimizeStrategyWithReport(workload, config));
  return std::move(report.strategy);
}

}  // namespace dhdmm::matmech
