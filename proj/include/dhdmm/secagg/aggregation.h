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

#ifndef DHDMM_SECAGG_AGGREGATION_H_
#define DHDMM_SECAGG_AGGREGATION_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dhdmm/fieldcodec/field.h"
#include "dhdmm/secagg/crypto.h"
#include "dhdmm/secagg/envelope.h"
#include "dhdmm/simnet/net.h"

namespace dhdmm::secagg {

using simnet::DropoutEvent;
using simnet::DropPhase;
using simnet::kServerId;
using simnet::PartyId;

enum class SecurityMode { kSemiHonest, kMalicious };

const char* ModeName(SecurityMode mode);
std::optional<SecurityMode> ParseMode(std::string_view name);

struct AggConfig {
  int64_t n = 0;
  // 0 selects min(n - 1, max(3, ceil(degree_factor * log2 n))).
  int64_t k_neighbors = 0;
  double degree_factor = 4.0;
  // 0 selects floor(k / 2) + 1.
  int64_t threshold = 0;
  SecurityMode mode = SecurityMode::kSemiHonest;
  double max_dropout_fraction = 0.3;
  SuiteKind suite = SuiteKind::kStandard;
  uint64_t p = fieldcodec::kMersenne61;

  absl::Status Validate() const;
};

struct AggParams {
  int64_t degree = 0;
  int64_t threshold = 0;
};

// Validates `cfg` and fills in the automatic degree and threshold.
absl::StatusOr<AggParams> ResolveAggParams(const AggConfig& cfg);

struct TranscriptEntry {
  uint8_t round = 0;
  PartyId from = 0;
  PartyId to = 0;
  std::string bytes;
};

struct AggTranscript {
  std::vector<TranscriptEntry> messages;
  std::vector<DropoutEvent> dropouts;
  // Signature verification keys by party, malicious mode only.
  std::map<PartyId, std::string> signing_keys;
};

struct AggHooks {
  bool record_transcript = false;
  // Malicious-server fault: the survivor set announced to `first` is
  // replaced by `second`.
  std::optional<std::pair<PartyId, std::vector<PartyId>>> forged_claim;
  // Attach point for input validation (range proofs in a full deployment),
  // run by the server on every masked input it accepts.
  std::function<absl::Status(PartyId, const fieldcodec::EncodedVector&)>
      input_validator;
};

struct AggResult {
  fieldcodec::EncodedVector sum;
  // Clients whose masked input reached the server; exactly these inputs
  // are in `sum`.
  std::vector<PartyId> survivors;
  std::vector<PartyId> dropped;
  int64_t degree = 0;
  int64_t threshold = 0;
  bool degree_adjusted = false;
  AggTranscript transcript;
};

// Runs secure aggregation of `inputs` (one vector per client, equal lengths,
// reduced mod cfg.p) over `net`, starting from each party's current clock.
// Rounds: advertise keys, share keys, masked input, consistency check
// (malicious mode only) and unmask. Dropouts in `dropouts` are applied at the
// named round; in semi-honest mode a consistency-check dropout takes effect
// before unmask.
absl::StatusOr<AggResult> RunAggregation(
    const std::vector<fieldcodec::EncodedVector>& inputs, const AggConfig& cfg,
    simnet::SimNet& net, std::span<const DropoutEvent> dropouts, uint64_t seed,
    const AggHooks& hooks = {});

}  // namespace dhdmm::secagg

#endif  // DHDMM_SECAGG_AGGREGATION_H_
