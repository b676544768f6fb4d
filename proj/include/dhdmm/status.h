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

#ifndef DHDMM_STATUS_H_
#define DHDMM_STATUS_H_

#include <cstdint>
#include <optional>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dhdmm {

// Library-specific failure categories. Each maps onto a canonical absl code
// and is attached to the status as a payload so callers can branch on it.
enum class ErrorKind {
  kInvalidRecord,
  kDimensionError,
  kNotSupported,
  kOptimizationFailed,
  kRangeOverflow,
  kRecoveryFailure,
  kAbortInsufficientShares,
  kAbortBadSignature,
  kAbortInconsistentSurvivors,
  kProtocolAborted,
  kInvalidConfig,
};

const char* ErrorKindName(ErrorKind kind);

absl::Status MakeError(ErrorKind kind, const std::string& message);

// Returns the kind attached by MakeError, if any.
std::optional<ErrorKind> GetErrorKind(const absl::Status& status);

inline bool HasErrorKind(const absl::Status& status, ErrorKind kind) {
  return GetErrorKind(status) == kind;
}

// Directed link a bad message travelled over.
struct Edge {
  uint32_t sender = 0;
  uint32_t receiver = 0;
  bool operator==(const Edge&) const = default;
};

absl::Status MakeBadSignatureError(Edge edge, const std::string& detail);

// Offending edge of a kAbortBadSignature status.
std::optional<Edge> GetOffendingEdge(const absl::Status& status);

// Re-wraps `status` as kProtocolAborted, prefixing the round that failed.
// The original kind stays readable through GetCauseKind.
absl::Status WrapProtocolAbort(const absl::Status& status,
                               const std::string& round);
std::optional<ErrorKind> GetCauseKind(const absl::Status& status);

}  // namespace dhdmm

#define DHDMM_RETURN_IF_ERROR(expr)            \
  do {                                         \
    ::absl::Status _dhdmm_status = (expr);     \
    if (!_dhdmm_status.ok()) return _dhdmm_status; \
  } while (0)

#define DHDMM_CONCAT_INNER(a, b) a##b
#define DHDMM_CONCAT(a, b) DHDMM_CONCAT_INNER(a, b)

#define DHDMM_ASSIGN_OR_RETURN(lhs, rexpr) \
  DHDMM_ASSIGN_OR_RETURN_IMPL(DHDMM_CONCAT(_dhdmm_statusor_, __LINE__), lhs, rexpr)

#define DHDMM_ASSIGN_OR_RETURN_IMPL(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                                \
  if (!tmp.ok()) return tmp.status();                \
  lhs = std::move(tmp).value()

#endif  // DHDMM_STATUS_H_
