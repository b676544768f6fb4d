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

#include "dhdmm/status.h"

#include <cstdlib>
#include <string>
#include <vector>

#include "absl/strings/cord.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"

namespace dhdmm {
namespace {

constexpr char kKindUrl[] = "dhdmm/error_kind";
constexpr char kEdgeUrl[] = "dhdmm/offending_edge";
constexpr char kCauseUrl[] = "dhdmm/cause_kind";

absl::StatusCode CodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidRecord:
    case ErrorKind::kDimensionError:
    case ErrorKind::kInvalidConfig:
      return absl::StatusCode::kInvalidArgument;
    case ErrorKind::kNotSupported:
    case ErrorKind::kRecoveryFailure:
      return absl::StatusCode::kFailedPrecondition;
    case ErrorKind::kOptimizationFailed:
      return absl::StatusCode::kInternal;
    case ErrorKind::kRangeOverflow:
      return absl::StatusCode::kOutOfRange;
    case ErrorKind::kAbortInsufficientShares:
    case ErrorKind::kAbortBadSignature:
    case ErrorKind::kAbortInconsistentSurvivors:
    case ErrorKind::kProtocolAborted:
      return absl::StatusCode::kAborted;
  }
  return absl::StatusCode::kUnknown;
}

std::optional<ErrorKind> ReadKind(const absl::Status& status,
                                  const char* url) {
  auto payload = status.GetPayload(url);
  if (!payload.has_value()) return std::nullopt;
  int value = std::atoi(std::string(*payload).c_str());
  return static_cast<ErrorKind>(value);
}

}  // namespace

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidRecord:
      return "InvalidRecord";
    case ErrorKind::kDimensionError:
      return "DimensionError";
    case ErrorKind::kNotSupported:
      return "NotSupported";
    case ErrorKind::kOptimizationFailed:
      return "OptimizationFailed";
    case ErrorKind::kRangeOverflow:
      return "RangeOverflow";
    case ErrorKind::kRecoveryFailure:
      return "RecoveryFailure";
    case ErrorKind::kAbortInsufficientShares:
      return "AbortInsufficientShares";
    case ErrorKind::kAbortBadSignature:
      return "AbortBadSignature";
    case ErrorKind::kAbortInconsistentSurvivors:
      return "AbortInconsistentSurvivors";
    case ErrorKind::kProtocolAborted:
      return "ProtocolAborted";
    case ErrorKind::kInvalidConfig:
      return "InvalidConfig";
  }
  return "Unknown";
}

absl::Status MakeError(ErrorKind kind, const std::string& message) {
  absl::Status status(CodeFor(kind),
                      absl::StrCat(ErrorKindName(kind), ": ", message));
  status.SetPayload(kKindUrl,
                    absl::Cord(absl::StrCat(static_cast<int>(kind))));
  return status;
}

std::optional<ErrorKind> GetErrorKind(const absl::Status& status) {
  if (status.ok()) return std::nullopt;
  return ReadKind(status, kKindUrl);
}

absl::Status MakeBadSignatureError(Edge edge, const std::string& detail) {
  absl::Status status = MakeError(
      ErrorKind::kAbortBadSignature,
      absl::StrCat("message on edge ", edge.sender, "->", edge.receiver,
                   " failed verification (", detail, ")"));
  status.SetPayload(kEdgeUrl,
                    absl::Cord(absl::StrCat(edge.sender, ",", edge.receiver)));
  return status;
}

std::optional<Edge> GetOffendingEdge(const absl::Status& status) {
  auto payload = status.GetPayload(kEdgeUrl);
  if (!payload.has_value()) return std::nullopt;
  std::vector<std::string> parts =
      absl::StrSplit(std::string(*payload), ',');
  if (parts.size() != 2) return std::nullopt;
  return Edge{static_cast<uint32_t>(std::stoul(parts[0])),
              static_cast<uint32_t>(std::stoul(parts[1]))};
}

absl::Status WrapProtocolAbort(const absl::Status& status,
                               const std::string& round) {
  if (HasErrorKind(status, ErrorKind::kProtocolAborted)) return status;
  absl::Status wrapped = MakeError(
      ErrorKind::kProtocolAborted, absl::StrCat(round, ": ", std::string(status.message())));
  std::optional<ErrorKind> cause = GetErrorKind(status);
  if (cause.has_value()) {
    wrapped.SetPayload(kCauseUrl,
                       absl::Cord(absl::StrCat(static_cast<int>(*cause))));
  }
  if (auto edge = status.GetPayload(kEdgeUrl)) {
    wrapped.SetPayload(kEdgeUrl, *edge);
  }
  return wrapped;
}

std::optional<ErrorKind> GetCauseKind(const absl::Status& status) {
  return ReadKind(status, kCauseUrl);
}

}  // namespace dhdmm
