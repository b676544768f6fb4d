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

#ifndef DHDMM_SECAGG_ENVELOPE_H_
#define DHDMM_SECAGG_ENVELOPE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"

namespace dhdmm::secagg {

enum class AggRound : uint8_t {
  kAdvertiseKeys = 1,
  kShareKeys = 2,
  kMaskedInput = 3,
  kConsistencyCheck = 4,
  kUnmask = 5,
};

const char* RoundName(AggRound round);
std::optional<AggRound> ParseRound(std::string_view name);

inline constexpr size_t kEnvelopeHeaderBytes = 13;
inline constexpr size_t kSignatureBytes = 64;

// Wire layout: round (1) | sender (4, LE) | receiver (4, LE) |
// payload length (4, LE) | payload | signature (64, malicious mode only).
struct Envelope {
  uint8_t round = 0;
  uint32_t sender = 0;
  uint32_t receiver = 0;
  std::string payload;
  std::string signature;
};

// Header and payload: the bytes a signature covers.
std::string SignedPortion(const Envelope& env);
std::string EncodeEnvelope(const Envelope& env);
absl::StatusOr<Envelope> DecodeEnvelope(std::string_view bytes,
                                        bool expect_signature);

}  // namespace dhdmm::secagg

#endif  // DHDMM_SECAGG_ENVELOPE_H_
