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

#include "dhdmm/secagg/envelope.h"

#include "absl/strings/str_cat.h"
#include "dhdmm/bytes.h"
#include "dhdmm/status.h"

namespace dhdmm::secagg {

const char* RoundName(AggRound round) {
  switch (round) {
    case AggRound::kAdvertiseKeys:
      return "advertise_keys";
    case AggRound::kShareKeys:
      return "share_keys";
    case AggRound::kMaskedInput:
      return "masked_input";
    case AggRound::kConsistencyCheck:
      return "consistency_check";
    case AggRound::kUnmask:
      return "unmask";
  }
  return "unknown";
}

std::optional<AggRound> ParseRound(std::string_view name) {
  for (int r = 1; r <= 5; ++r) {
    if (name == RoundName(static_cast<AggRound>(r))) {
      return static_cast<AggRound>(r);
    }
  }
  return std::nullopt;
}

std::string SignedPortion(const Envelope& env) {
  ByteWriter w;
  w.Reserve(kEnvelopeHeaderBytes + env.payload.size() + kSignatureBytes);
  w.U8(env.round);
  w.U32(env.sender);
  w.U32(env.receiver);
  w.U32(static_cast<uint32_t>(env.payload.size()));
  w.Raw(env.payload);
  return w.Take();
}

std::string EncodeEnvelope(const Envelope& env) {
  std::string out = SignedPortion(env);
  out += env.signature;
  return out;
}

absl::StatusOr<Envelope> DecodeEnvelope(std::string_view bytes,
                                        bool expect_signature) {
  ByteReader r(bytes);
  Envelope env;
  env.round = r.U8();
  env.sender = r.U32();
  env.receiver = r.U32();
  uint32_t length = r.U32();
  env.payload = std::string(r.Raw(length));
  if (expect_signature) env.signature = std::string(r.Raw(kSignatureBytes));
  if (!r.done()) {
    return MakeError(ErrorKind::kProtocolAborted,
                     absl::StrCat("malformed envelope of ", bytes.size(),
                                  " bytes"));
  }
  return env;
}

}  // namespace dhdmm::secagg
