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

#ifndef DHDMM_PROTOCOL_PROTOCOL_H_
#define DHDMM_PROTOCOL_PROTOCOL_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dhdmm/dpnoise/accountant.h"
#include "dhdmm/fieldcodec/field.h"
#include "dhdmm/matmech/domain.h"
#include "dhdmm/matmech/mechanism.h"
#include "dhdmm/matmech/optimizer.h"
#include "dhdmm/random.h"
#include "dhdmm/secagg/aggregation.h"
#include "dhdmm/simnet/net.h"
#include "json.hpp"

namespace dhdmm::protocol {

using secagg::PartyId;

// Round tag of the strategy broadcast. Secure aggregation uses tags 1-5.
inline constexpr uint8_t kStrategyRound = 0;

struct ProtocolParams {
  int64_t n = 1;
  double theta = 0.0;
  double rho = 0.1;
  double gamma = 1000.0;
  uint64_t p = fieldcodec::kMersenne61;
  // Only used to convert the guarantee to (epsilon, delta) in the report.
  double delta = 1e-5;
  secagg::SecurityMode mode = secagg::SecurityMode::kSemiHonest;
  // Secure aggregation knobs. n, mode and p are taken from the fields above.
  secagg::AggConfig agg;
  matmech::OptimizerConfig optimizer;
  // Debug switch: clients add no noise. The privacy report still describes
  // the configured guarantee, which such a run does not provide.
  bool noise_disabled = false;
  uint64_t seed = 0;

  absl::Status Validate() const;
  secagg::AggConfig ResolvedAggConfig() const;
  fieldcodec::FieldParams Field() const;
  dpnoise::PrivacyParams Privacy(double delta2) const;
};

struct ClientInput {
  std::vector<matmech::Record> records;
};

// An optimized strategy ready to broadcast, with its reconstruction
// operator. Reusable across runs that share a workload and optimizer config.
struct PreparedStrategy {
  matmech::MeasurementPlan plan;
  double optimizer_flops = 0.0;
  std::string chosen;
};

// Round 1, server side: optimize the strategy for `workload`.
absl::StatusOr<PreparedStrategy> ServerRound1(const ProtocolParams& params,
                                              const matmech::Workload& workload);

// Wire format of the broadcast: u64 rows, u64 cols, then the entries in
// row-major order as little-endian IEEE doubles.
std::string SerializeStrategy(const matmech::Matrix& a);
absl::StatusOr<matmech::Matrix> DeserializeStrategy(std::string_view bytes,
                                                    int64_t expected_cols);

struct ClientRound2Output {
  fieldcodec::EncodedVector encoded;
  double delta2 = 0.0;  // computed from the received matrix
  double sigma2 = 0.0;  // per-coordinate noise variance actually added
  int64_t records = 0;
};

// Round 2, client side: parse the broadcast, compute its sensitivity
// locally, measure the client's histogram and encode it with the per-client
// noise share. RangeOverflow when the encoding leaves the field.
absl::StatusOr<ClientRound2Output> ClientRound2(
    const ProtocolParams& params, const matmech::DomainSpec& domain,
    std::string_view strategy_bytes, const ClientInput& input, Rng& rng);

struct ServerOutput {
  matmech::Vector answer;
  dpnoise::PrivacyReport privacy;
};

// Round 3, server side: decode the aggregate and reconstruct the workload
// answers; a pure function of its arguments. The privacy report uses the
// realized survivor count.
absl::StatusOr<ServerOutput> ServerRound3(
    const ProtocolParams& params, const matmech::MeasurementPlan& plan,
    const fieldcodec::EncodedVector& aggregate, int64_t survivors,
    double delta2);

// Injected misbehaviour.
struct Faults {
  // Malicious server: broadcasts strategy_scale * A instead of A.
  double strategy_scale = 1.0;
  // Corrupted clients: submit a uniformly random field vector.
  std::vector<PartyId> garbage_clients;
  std::optional<simnet::TamperSpec> tamper;
  secagg::AggHooks agg_hooks;
};

struct RunOptions {
  simnet::NetConfig net;
  Faults faults;
  // Skips the optimizer in round 1. Its simulated cost is still charged.
  std::optional<PreparedStrategy> strategy;
};

struct ClientReport {
  double delta2 = 0.0;
  double sigma2 = 0.0;
  bool submitted = true;
};

struct ProtocolResult {
  matmech::Vector answer;
  dpnoise::PrivacyReport privacy;
  simnet::RunMetrics metrics;
  // Decoded by round 3; kept so the answer can be recomputed.
  fieldcodec::EncodedVector aggregate;
  // The matrix the clients received.
  matmech::Matrix strategy;
  std::string strategy_chosen;
  std::vector<PartyId> survivors;
  std::vector<PartyId> dropped;
  std::vector<ClientReport> clients;
  // Per-client faults, e.g. an encoding that left the field.
  std::vector<std::string> fault_log;

  // Answer, privacy report and the deterministic metrics summary.
  nlohmann::json ToJson() const;
};

// Outcome of a simulated run. On failure `status` names the round, `result`
// is empty and `metrics` covers the run up to the failure.
struct SimulationOutcome {
  absl::Status status;
  std::optional<ProtocolResult> result;
  simnet::RunMetrics metrics;
};

// Runs the three rounds over a SimNet configured by options.net. Needs one
// input per client. Deterministic in params.seed.
SimulationOutcome RunSimulation(const ProtocolParams& params,
                                const matmech::Workload& workload,
                                const std::vector<ClientInput>& inputs,
                                const RunOptions& options = {});

absl::StatusOr<ProtocolResult> RunProtocol(const ProtocolParams& params,
                                           const matmech::Workload& workload,
                                           const std::vector<ClientInput>& inputs,
                                           const RunOptions& options = {});

// Per-query bound on |answer - W x| from fixed-point truncation when noise
// is disabled: each of n clients floors every coordinate, losing less than
// 1/gamma, and W A^+ maps that error to (n / gamma) * ||row_q(W A^+)||_1.
matmech::Vector TruncationBound(const matmech::Matrix& reconstruction,
                                int64_t n, double gamma);

}  // namespace dhdmm::protocol

#endif  // DHDMM_PROTOCOL_PROTOCOL_H_
