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

#ifndef DHDMM_SIMNET_NET_H_
#define DHDMM_SIMNET_NET_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "json.hpp"

namespace dhdmm::simnet {

using PartyId = uint32_t;
inline constexpr PartyId kServerId = std::numeric_limits<PartyId>::max();
inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

enum class DropPhase { kBefore, kAfter };

// Client `client` stops participating at `round` (a secure aggregation round
// tag). kBefore: it sends nothing in that round. kAfter: it sends its round
// message and then goes silent.
struct DropoutEvent {
  PartyId client = 0;
  uint8_t round = 0;
  DropPhase phase = DropPhase::kBefore;
  bool operator==(const DropoutEvent&) const = default;
};

// Deterministic per-operation costs (seconds) used for simulated time, so
// the simulated clock does not depend on the host.
struct CostModel {
  double flop = 1e-9;             // one multiply-add
  double field_op = 3e-9;         // one modular multiply
  double prg_element = 5e-9;      // one expanded field element
  double noise_sample = 2e-7;     // one discrete Gaussian draw
  double key_agreement = 5e-5;
  double sign = 2.5e-5;
  double verify = 6e-5;
  double cipher_fixed = 1e-6;     // per authenticated encryption/decryption
  double byte = 1e-9;             // serialization or hashing, per byte
};

struct NetConfig {
  double client_up_bw = kUnlimited;    // bytes per second
  double client_down_bw = kUnlimited;  // bytes per second
  double server_bw = kUnlimited;       // bytes per second, each direction
  double latency = 0.0;                // seconds per message
  std::vector<DropoutEvent> dropout_schedule;
  CostModel cost;

  absl::Status Validate() const;
};

// send_time + latency + bytes / min(up_bw, down_bw) for a message on idle
// links. Unlimited bandwidth contributes no transfer time.
double DeliveryTime(double send_time, double bytes, double up_bw,
                    double down_bw, double latency);

struct PartyMetrics {
  double compute_s = 0.0;  // simulated, from the cost model
  double wall_s = 0.0;     // host wall clock
  int64_t bytes_sent = 0;
  int64_t bytes_received = 0;
  int64_t messages_sent = 0;
  int64_t messages_received = 0;
};

struct RunMetrics {
  std::vector<PartyMetrics> clients;
  PartyMetrics server;
  int64_t bytes_to_dropped = 0;
  double total_time_s = 0.0;
  std::vector<std::pair<std::string, double>> round_timestamps;

  int64_t TotalBytesSent() const;
  int64_t TotalBytesReceived() const;
  double AvgClientCompute() const;
  double AvgClientBytesSent() const;
  double AvgClientBytesReceived() const;
  double MaxClientBytes() const;
  double AvgClientWall() const;

  // Deterministic fields only: everything except wall clock.
  nlohmann::json SummaryJson() const;
  nlohmann::json TimingJson() const;
  // One row per party: party,compute_s,bytes_sent,bytes_received,...
  std::string PartyCsv() const;
};

struct Message {
  PartyId from = 0;
  PartyId to = 0;
  uint8_t round = 0;
  std::string bytes;
  double delivered_at = 0.0;
  uint64_t seq = 0;
};

// Flip `xor_mask` into byte `byte_index % size` of the first message sent on
// (from -> to) in `round`.
struct TamperSpec {
  uint8_t round = 0;
  PartyId from = 0;
  PartyId to = 0;
  size_t byte_index = 0;
  uint8_t xor_mask = 1;
};

// Single-process discrete-event network. Every party has a local clock;
// computation advances it and messages are delivered at
// max(link availability) + latency + serialization delay. Each link
// (a party's uplink, a party's downlink) transmits one message at a time.
// Ties are ordered by (time, sender, sequence number).
class SimNet {
 public:
  SimNet(int64_t num_clients, NetConfig config);

  int64_t num_clients() const { return num_clients_; }
  const NetConfig& config() const { return config_; }
  const CostModel& cost() const { return config_.cost; }

  double Now(PartyId party) const { return clock_[Index(party)]; }
  void AdvanceTo(PartyId party, double t);
  // Charges simulated compute time (and optionally measured wall time).
  void Compute(PartyId party, double simulated_s, double wall_s = 0.0);

  // Queues a message from `from`'s current clock. Ignored when `from` has
  // dropped.
  void Send(PartyId from, PartyId to, uint8_t round, std::string bytes);
  // Delivers every queued message and returns those addressed to `to`, in
  // delivery order, advancing `to`'s clock to the last delivery. A dropped
  // party receives nothing.
  std::vector<Message> Receive(PartyId to);

  void Drop(PartyId party);
  bool IsDropped(PartyId party) const { return dropped_[Index(party)]; }

  // Records max(clock over live parties) under `name`.
  void MarkRound(const std::string& name);

  void SetTamper(TamperSpec spec) { tamper_ = spec; }
  bool tamper_applied() const { return tamper_applied_; }

  RunMetrics Metrics() const;

 private:
  struct Pending {
    double arrival;  // first bit reaches the receiver
    double tx_end;   // last bit leaves the sender
    PartyId from;
    uint64_t seq;
    size_t slot;
  };
  struct Later {
    bool operator()(const Pending& a, const Pending& b) const;
  };

  size_t Index(PartyId p) const {
    return p == kServerId ? static_cast<size_t>(num_clients_) : p;
  }
  double UpBw(PartyId p) const;
  double DownBw(PartyId p) const;
  void Flush();

  int64_t num_clients_;
  NetConfig config_;
  std::vector<double> clock_;
  std::vector<double> up_free_;
  std::vector<double> down_free_;
  std::vector<bool> dropped_;
  std::vector<PartyMetrics> metrics_;
  std::vector<std::vector<Message>> inbox_;
  std::vector<Message> in_flight_;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  int64_t bytes_to_dropped_ = 0;
  uint64_t next_seq_ = 0;
  std::vector<std::pair<std::string, double>> rounds_;
  std::optional<TamperSpec> tamper_;
  bool tamper_applied_ = false;
};

}  // namespace dhdmm::simnet

#endif  // DHDMM_SIMNET_NET_H_
