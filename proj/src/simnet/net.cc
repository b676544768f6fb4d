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

#include "dhdmm/simnet/net.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "dhdmm/status.h"

namespace dhdmm::simnet {
namespace {

double Transfer(double bytes, double bw) {
  if (std::isinf(bw) || bytes == 0.0) return 0.0;
  return bytes / bw;
}

bool ValidBandwidth(double bw) { return bw > 0.0; }

nlohmann::json PartyJson(const PartyMetrics& m) {
  return {{"compute_s", m.compute_s},
          {"bytes_sent", m.bytes_sent},
          {"bytes_received", m.bytes_received},
          {"messages_sent", m.messages_sent},
          {"messages_received", m.messages_received}};
}

}  // namespace

absl::Status NetConfig::Validate() const {
  if (!ValidBandwidth(client_up_bw) || !ValidBandwidth(client_down_bw) ||
      !ValidBandwidth(server_bw)) {
    return MakeError(ErrorKind::kInvalidConfig,
                     "bandwidths must be positive or unlimited");
  }
  if (!(latency >= 0.0) || std::isinf(latency)) {
    return MakeError(ErrorKind::kInvalidConfig,
                     "latency must be finite and nonnegative");
  }
  return absl::OkStatus();
}

double DeliveryTime(double send_time, double bytes, double up_bw,
                    double down_bw, double latency) {
  return send_time + latency + Transfer(bytes, std::min(up_bw, down_bw));
}

int64_t RunMetrics::TotalBytesSent() const {
  int64_t total = server.bytes_sent;
  for (const auto& c : clients) total += c.bytes_sent;
  return total;
}

int64_t RunMetrics::TotalBytesReceived() const {
  int64_t total = server.bytes_received;
  for (const auto& c : clients) total += c.bytes_received;
  return total;
}

double RunMetrics::AvgClientCompute() const {
  if (clients.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : clients) s += c.compute_s;
  return s / clients.size();
}

double RunMetrics::AvgClientWall() const {
  if (clients.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : clients) s += c.wall_s;
  return s / clients.size();
}

double RunMetrics::AvgClientBytesSent() const {
  if (clients.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : clients) s += c.bytes_sent;
  return s / clients.size();
}

double RunMetrics::AvgClientBytesReceived() const {
  if (clients.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : clients) s += c.bytes_received;
  return s / clients.size();
}

double RunMetrics::MaxClientBytes() const {
  double best = 0.0;
  for (const auto& c : clients) {
    best = std::max(best, static_cast<double>(c.bytes_sent + c.bytes_received));
  }
  return best;
}

nlohmann::json RunMetrics::SummaryJson() const {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& [name, t] : round_timestamps) {
    rounds.push_back({{"round", name}, {"time_s", t}});
  }
  return {{"clients", clients.size()},
          {"total_time_s", total_time_s},
          {"avg_client_compute_s", AvgClientCompute()},
          {"avg_client_bytes_sent", AvgClientBytesSent()},
          {"avg_client_bytes_received", AvgClientBytesReceived()},
          {"server", PartyJson(server)},
          {"total_bytes_sent", TotalBytesSent()},
          {"total_bytes_received", TotalBytesReceived()},
          {"bytes_to_dropped", bytes_to_dropped},
          {"round_timestamps", rounds}};
}

nlohmann::json RunMetrics::TimingJson() const {
  return {{"server_wall_s", server.wall_s},
          {"avg_client_wall_s", AvgClientWall()}};
}

std::string RunMetrics::PartyCsv() const {
  std::string out =
      "party,compute_s,wall_s,bytes_sent,bytes_received,messages_sent,"
      "messages_received\n";
  auto row = [&out](const std::string& name, const PartyMetrics& m) {
    absl::StrAppend(&out, name, ",", m.compute_s, ",", m.wall_s, ",",
                    m.bytes_sent, ",", m.bytes_received, ",", m.messages_sent,
                    ",", m.messages_received, "\n");
  };
  row("server", server);
  for (size_t i = 0; i < clients.size(); ++i) {
    row(absl::StrCat("client", i), clients[i]);
  }
  return out;
}

bool SimNet::Later::operator()(const Pending& a, const Pending& b) const {
  if (a.arrival != b.arrival) return a.arrival > b.arrival;
  if (a.from != b.from) return a.from > b.from;
  return a.seq > b.seq;
}

SimNet::SimNet(int64_t num_clients, NetConfig config)
    : num_clients_(num_clients),
      config_(std::move(config)),
      clock_(num_clients + 1, 0.0),
      up_free_(num_clients + 1, 0.0),
      down_free_(num_clients + 1, 0.0),
      dropped_(num_clients + 1, false),
      metrics_(num_clients + 1),
      inbox_(num_clients + 1) {}

double SimNet::UpBw(PartyId p) const {
  return p == kServerId ? config_.server_bw : config_.client_up_bw;
}

double SimNet::DownBw(PartyId p) const {
  return p == kServerId ? config_.server_bw : config_.client_down_bw;
}

void SimNet::AdvanceTo(PartyId party, double t) {
  double& c = clock_[Index(party)];
  c = std::max(c, t);
}

void SimNet::Compute(PartyId party, double simulated_s, double wall_s) {
  size_t i = Index(party);
  clock_[i] += simulated_s;
  metrics_[i].compute_s += simulated_s;
  metrics_[i].wall_s += wall_s;
}

void SimNet::Send(PartyId from, PartyId to, uint8_t round, std::string bytes) {
  size_t fi = Index(from);
  if (dropped_[fi]) return;
  if (tamper_ && !tamper_applied_ && tamper_->round == round &&
      tamper_->from == from && tamper_->to == to && !bytes.empty()) {
    bytes[tamper_->byte_index % bytes.size()] ^= static_cast<char>(
        tamper_->xor_mask == 0 ? 1 : tamper_->xor_mask);
    tamper_applied_ = true;
  }
  const double size = static_cast<double>(bytes.size());
  double tx_start = std::max(clock_[fi], up_free_[fi]);
  double tx_end = tx_start + Transfer(size, UpBw(from));
  up_free_[fi] = tx_end;
  metrics_[fi].bytes_sent += bytes.size();
  metrics_[fi].messages_sent += 1;
  Message msg;
  msg.from = from;
  msg.to = to;
  msg.round = round;
  msg.bytes = std::move(bytes);
  msg.seq = next_seq_++;
  in_flight_.push_back(std::move(msg));
  queue_.push(Pending{tx_start + config_.latency, tx_end + config_.latency,
                      from, in_flight_.back().seq, in_flight_.size() - 1});
}

void SimNet::Flush() {
  while (!queue_.empty()) {
    Pending p = queue_.top();
    queue_.pop();
    Message& msg = in_flight_[p.slot];
    size_t ti = Index(msg.to);
    if (dropped_[ti]) {
      bytes_to_dropped_ += msg.bytes.size();
      continue;
    }
    const double size = static_cast<double>(msg.bytes.size());
    double rx_start = std::max(p.arrival, down_free_[ti]);
    double done = std::max(rx_start + Transfer(size, DownBw(msg.to)), p.tx_end);
    down_free_[ti] = done;
    msg.delivered_at = done;
    metrics_[ti].bytes_received += msg.bytes.size();
    metrics_[ti].messages_received += 1;
    inbox_[ti].push_back(std::move(msg));
  }
  in_flight_.clear();
}

std::vector<Message> SimNet::Receive(PartyId to) {
  Flush();
  size_t ti = Index(to);
  std::vector<Message> out;
  out.swap(inbox_[ti]);
  if (dropped_[ti]) return {};
  for (const Message& m : out) AdvanceTo(to, m.delivered_at);
  return out;
}

void SimNet::Drop(PartyId party) {
  size_t i = Index(party);
  if (dropped_[i]) return;
  // Messages already on the wire to this party are lost.
  Flush();
  for (const Message& m : inbox_[i]) bytes_to_dropped_ += m.bytes.size();
  for (const Message& m : inbox_[i]) {
    metrics_[i].bytes_received -= m.bytes.size();
    metrics_[i].messages_received -= 1;
  }
  inbox_[i].clear();
  dropped_[i] = true;
}

void SimNet::MarkRound(const std::string& name) {
  double t = 0.0;
  for (size_t i = 0; i < clock_.size(); ++i) {
    if (!dropped_[i]) t = std::max(t, clock_[i]);
  }
  rounds_.emplace_back(name, t);
}

RunMetrics SimNet::Metrics() const {
  RunMetrics m;
  m.clients.assign(metrics_.begin(), metrics_.begin() + num_clients_);
  m.server = metrics_.back();
  m.bytes_to_dropped = bytes_to_dropped_;
  m.round_timestamps = rounds_;
  double t = 0.0;
  for (size_t i = 0; i < clock_.size(); ++i) {
    t = std::max(t, clock_[i]);
  }
  // Deliveries not yet consumed still extend the run.
  for (const auto& box : inbox_) {
    for (const Message& msg : box) t = std::max(t, msg.delivered_at);
  }
  m.total_time_s = t;
  return m;
}

}  // namespace dhdmm::simnet
