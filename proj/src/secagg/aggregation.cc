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

#include "dhdmm/secagg/aggregation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "absl/strings/str_cat.h"
#include "dhdmm/bytes.h"
#include "dhdmm/random.h"
#include "dhdmm/secagg/graph.h"
#include "dhdmm/secagg/shamir.h"
#include "dhdmm/status.h"

namespace dhdmm::secagg {
namespace {

using fieldcodec::EncodedVector;
using simnet::Message;
using simnet::SimNet;

constexpr uint8_t kShareSelfMask = 0;
constexpr uint8_t kShareSecretKey = 1;
constexpr char kClaimLabel[] = "dhdmm.secagg.claim";

uint8_t Tag(AggRound r) { return static_cast<uint8_t>(r); }

std::string PairContext(std::string_view shared, PartyId a, PartyId b) {
  ByteWriter w;
  w.Raw(shared);
  w.U32(std::min(a, b));
  w.U32(std::max(a, b));
  return w.Take();
}

std::string EncodeIdList(const std::vector<PartyId>& ids) {
  ByteWriter w;
  w.U32(static_cast<uint32_t>(ids.size()));
  for (PartyId id : ids) w.U32(id);
  return w.Take();
}

bool DecodeIdList(std::string_view bytes, std::vector<PartyId>& out) {
  ByteReader r(bytes);
  uint32_t count = r.U32();
  if (!r.ok() || r.remaining() != 4ull * count) return false;
  out.resize(count);
  for (auto& id : out) id = r.U32();
  return r.done();
}

// Wall-clock stopwatch for one party's step.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// What a client knows about one graph neighbour.
struct Peer {
  PartyId id = 0;
  bool live = false;  // advertised a key
  bool held = false;  // its shares reached us
  std::string public_key;
  Seed32 mask_seed{};
  Seed32 share_key{};
  std::vector<uint64_t> secret_key_share;
  std::vector<uint64_t> self_mask_share;
};

struct ClientState {
  PartyId id = 0;
  KeyPair agreement;
  KeyPair signing;
  std::string self_seed;
  std::vector<Peer> peers;  // parallel to the sorted neighbour list
  int live_count = 0;
  std::string claim;
  int round = 0;

  Peer* Find(PartyId j) {
    auto it = std::lower_bound(
        peers.begin(), peers.end(), j,
        [](const Peer& p, PartyId v) { return p.id < v; });
    return it != peers.end() && it->id == j ? &*it : nullptr;
  }
};

std::string_view SeedView(const Seed32& s) {
  return {reinterpret_cast<const char*>(s.data()), s.size()};
}

class AggregationRun {
 public:
  AggregationRun(const std::vector<EncodedVector>& inputs, const AggConfig& cfg,
                 AggParams params, SimNet& net, const AggHooks& hooks,
                 uint64_t seed)
      : inputs_(inputs),
        cfg_(cfg),
        params_(params),
        net_(net),
        hooks_(hooks),
        suite_(GetSuite(cfg.suite)),
        malicious_(cfg.mode == SecurityMode::kMalicious),
        seed_(seed),
        n_(cfg.n),
        t_(static_cast<int>(params.threshold)),
        length_(inputs.empty() ? 0 : inputs[0].size()) {}

  absl::StatusOr<AggResult> Run(std::span<const DropoutEvent> dropouts);

 private:
  // Protocol steps.
  absl::Status AdvertiseKeys();
  absl::Status ShareKeys();
  absl::Status MaskedInput();
  absl::Status ConsistencyCheck();
  absl::Status Unmask();

  absl::Status ClientShareKeys(ClientState& c, double& cost);
  absl::Status ClientMaskedInput(ClientState& c, double& cost);
  absl::Status ClientRespond(ClientState& c, double& cost);
  absl::Status ServerRecover(const std::map<PartyId, std::vector<std::pair<uint64_t, std::vector<uint64_t>>>>& self_mask_shares,
                             const std::map<PartyId, std::vector<std::pair<uint64_t, std::vector<uint64_t>>>>& key_shares);

  bool DropsAt(PartyId i, AggRound r, DropPhase phase) const {
    auto it = drop_.find({i, Tag(r)});
    return it != drop_.end() && it->second == phase;
  }
  bool Alive(PartyId i) const { return !net_.IsDropped(i); }
  void DropIf(PartyId i, AggRound r, DropPhase phase) {
    if (DropsAt(i, r, phase)) net_.Drop(i);
  }

  void Post(PartyId from, PartyId to, AggRound r, std::string payload,
            double& cost);
  absl::StatusOr<Envelope> Accept(const Message& m, AggRound expected,
                                  double& cost);
  // Exactly one message from the server in round `r`.
  absl::StatusOr<Envelope> AcceptFromServer(PartyId i, AggRound r,
                                            double& cost);
  absl::Status Malformed(const Message& m, const std::string& what) const;
  const std::string& SigningKey(PartyId p) const {
    return p == kServerId ? server_signing_.public_key
                          : clients_[p].signing.public_key;
  }
  const std::string& SigningSecret(PartyId p) const {
    return p == kServerId ? server_signing_.secret_key
                          : clients_[p].signing.secret_key;
  }
  bool IsNeighbor(PartyId a, PartyId b) const {
    const auto& adj = graph_.neighbors[a];
    return std::binary_search(adj.begin(), adj.end(), b);
  }

  const std::vector<EncodedVector>& inputs_;
  const AggConfig& cfg_;
  AggParams params_;
  SimNet& net_;
  const AggHooks& hooks_;
  const CryptoSuite& suite_;
  const bool malicious_;
  const uint64_t seed_;
  const int64_t n_;
  const int t_;
  const size_t length_;
  const simnet::CostModel& cost_ = net_.cost();

  NeighborGraph graph_;
  std::vector<ClientState> clients_;
  KeyPair server_signing_;
  std::map<std::pair<PartyId, uint8_t>, DropPhase> drop_;
  AggTranscript transcript_;

  // Server view.
  std::vector<PartyId> u1_, u2_, u3_, u4_;
  std::vector<std::string> server_pk_;
  std::vector<std::string> advert_;                // verbatim envelopes
  std::map<PartyId, std::vector<PartyId>> share_targets_;
  std::map<PartyId, EncodedVector> masked_;
  std::map<PartyId, std::string> claim_sent_;
  std::map<PartyId, std::string> echo_;
  EncodedVector sum_;
};

absl::Status AggregationRun::Malformed(const Message& m,
                                       const std::string& what) const {
  std::string detail = absl::StrCat(what, " (", RoundName(static_cast<AggRound>(m.round)),
                                    " message)");
  if (malicious_) return MakeBadSignatureError(Edge{m.from, m.to}, detail);
  return MakeError(ErrorKind::kProtocolAborted,
                   absl::StrCat("malformed message on ", m.from, "->", m.to,
                                ": ", detail));
}

void AggregationRun::Post(PartyId from, PartyId to, AggRound r,
                          std::string payload, double& cost) {
  Envelope env;
  env.round = Tag(r);
  env.sender = from;
  env.receiver = to;
  env.payload = std::move(payload);
  if (malicious_) {
    env.signature = suite_.Sign(SigningSecret(from), SignedPortion(env));
    cost += cost_.sign;
  }
  std::string bytes = EncodeEnvelope(env);
  cost += cost_.byte * bytes.size();
  if (hooks_.record_transcript) {
    transcript_.messages.push_back({env.round, from, to, bytes});
  }
  net_.Send(from, to, env.round, std::move(bytes));
}

absl::StatusOr<Envelope> AggregationRun::Accept(const Message& m,
                                                AggRound expected,
                                                double& cost) {
  cost += cost_.byte * m.bytes.size();
  auto env = DecodeEnvelope(m.bytes, malicious_);
  if (!env.ok()) return Malformed(m, "undecodable envelope");
  if (malicious_) {
    cost += cost_.verify;
    bool known = env->sender == kServerId ||
                 env->sender < static_cast<uint64_t>(n_);
    if (!known ||
        !suite_.Verify(SigningKey(env->sender), SignedPortion(*env),
                       env->signature)) {
      return MakeBadSignatureError(
          Edge{m.from, m.to},
          absl::StrCat("signature check failed in ",
                       RoundName(static_cast<AggRound>(m.round))));
    }
  }
  if (env->sender != m.from || env->receiver != m.to ||
      env->round != Tag(expected)) {
    return Malformed(m, "envelope header does not match its link");
  }
  return env;
}

absl::StatusOr<Envelope> AggregationRun::AcceptFromServer(PartyId i,
                                                          AggRound r,
                                                          double& cost) {
  std::vector<Message> msgs = net_.Receive(i);
  if (msgs.size() != 1 || msgs[0].from != kServerId) {
    return MakeError(ErrorKind::kProtocolAborted,
                     absl::StrCat("client ", i, " expected one server message in ",
                                  RoundName(r), ", got ", msgs.size()));
  }
  return Accept(msgs[0], r, cost);
}

absl::Status AggregationRun::AdvertiseKeys() {
  for (PartyId i = 0; i < n_; ++i) {
    DropIf(i, AggRound::kAdvertiseKeys, DropPhase::kBefore);
    if (!Alive(i)) continue;
    Stopwatch sw;
    double cost = cost_.key_agreement;
    ClientState& c = clients_[i];
    ByteWriter w;
    w.Blob(c.agreement.public_key);
    Post(i, kServerId, AggRound::kAdvertiseKeys, w.Take(), cost);
    c.round = 1;
    net_.Compute(i, cost, sw.Seconds());
    DropIf(i, AggRound::kAdvertiseKeys, DropPhase::kAfter);
  }

  Stopwatch sw;
  double cost = 0.0;
  server_pk_.assign(n_, "");
  advert_.assign(n_, "");
  for (const Message& m : net_.Receive(kServerId)) {
    DHDMM_ASSIGN_OR_RETURN(Envelope env,
                           Accept(m, AggRound::kAdvertiseKeys, cost));
    ByteReader r(env.payload);
    std::string_view pk = r.Blob();
    if (!r.done()) return Malformed(m, "bad key advertisement");
    server_pk_[m.from] = std::string(pk);
    advert_[m.from] = m.bytes;
    u1_.push_back(m.from);
  }
  std::sort(u1_.begin(), u1_.end());
  std::vector<bool> in_u1(n_, false);
  for (PartyId i : u1_) in_u1[i] = true;
  for (PartyId i : u1_) {
    ByteWriter w;
    std::vector<PartyId> listed;
    for (PartyId j : graph_.neighbors[i]) {
      if (in_u1[j]) listed.push_back(j);
    }
    w.U32(static_cast<uint32_t>(listed.size()));
    for (PartyId j : listed) {
      w.U32(j);
      w.Blob(advert_[j]);
    }
    Post(kServerId, i, AggRound::kAdvertiseKeys, w.Take(), cost);
  }
  net_.Compute(kServerId, cost, sw.Seconds());
  net_.MarkRound(RoundName(AggRound::kAdvertiseKeys));
  return absl::OkStatus();
}

absl::Status AggregationRun::ClientShareKeys(ClientState& c, double& cost) {
  const PartyId i = c.id;
  DHDMM_ASSIGN_OR_RETURN(Envelope env,
                         AcceptFromServer(i, AggRound::kAdvertiseKeys, cost));
  Message link{kServerId, i, Tag(AggRound::kAdvertiseKeys), "", 0, 0};
  ByteReader r(env.payload);
  uint32_t count = r.U32();
  for (uint32_t e = 0; e < count && r.ok(); ++e) {
    PartyId j = r.U32();
    std::string_view blob = r.Blob();
    Peer* peer = r.ok() ? c.Find(j) : nullptr;
    if (peer == nullptr || peer->live) {
      return Malformed(link, "bad neighbour key list");
    }
    auto inner = DecodeEnvelope(blob, malicious_);
    if (!inner.ok() || inner->sender != j || inner->receiver != kServerId ||
        inner->round != Tag(AggRound::kAdvertiseKeys)) {
      return Malformed(link, "bad relayed key advertisement");
    }
    if (malicious_) {
      cost += cost_.verify;
      if (!suite_.Verify(SigningKey(j), SignedPortion(*inner),
                         inner->signature)) {
        return MakeBadSignatureError(Edge{kServerId, i},
                                     "relayed key advertisement forged");
      }
    }
    ByteReader ir(inner->payload);
    std::string_view pk = ir.Blob();
    if (!ir.done()) return Malformed(link, "bad relayed key");
    peer->public_key = std::string(pk);
    peer->live = true;
    ++c.live_count;
  }
  if (!r.done()) return Malformed(link, "trailing bytes in key list");

  DropIf(i, AggRound::kShareKeys, DropPhase::kBefore);
  if (!Alive(i)) return absl::OkStatus();

  std::vector<uint64_t> xs;
  std::vector<Peer*> live;
  xs.reserve(c.live_count);
  live.reserve(c.live_count);
  for (Peer& peer : c.peers) {
    if (!peer.live) continue;
    auto shared = suite_.Agree(c.agreement.secret_key, peer.public_key);
    if (!shared.ok()) return Malformed(link, "unusable neighbour key");
    std::string ctx = PairContext(*shared, i, peer.id);
    peer.mask_seed = suite_.Kdf("dhdmm.secagg.mask", ctx);
    peer.share_key = suite_.Kdf("dhdmm.secagg.share", ctx);
    xs.push_back(static_cast<uint64_t>(peer.id) + 1);
    live.push_back(&peer);
  }
  cost += cost_.key_agreement * live.size();

  ByteWriter out;
  const size_t chunks = 2 * ChunkCount(suite_.secret_bytes());
  out.Reserve(4 + live.size() * (8 + 8 * chunks + 96));
  out.U32(static_cast<uint32_t>(live.size()));
  if (!live.empty()) {
    Rng rng = Rng(seed_).Derive("secagg.client.shares", i);
    DHDMM_ASSIGN_OR_RETURN(
        auto sk_shares,
        ShareBytes(AsBytes(c.agreement.secret_key), t_, xs, rng));
    DHDMM_ASSIGN_OR_RETURN(auto b_shares,
                           ShareBytes(AsBytes(c.self_seed), t_, xs, rng));
    cost += cost_.field_op * t_ * xs.size() *
            (sk_shares[0].size() + b_shares[0].size());
    for (size_t h = 0; h < xs.size(); ++h) {
      PartyId j = live[h]->id;
      ByteWriter pt;
      pt.Reserve(10 + 8 * chunks);
      pt.U32(i);
      pt.U32(j);
      pt.U8(static_cast<uint8_t>(sk_shares[h].size()));
      for (uint64_t v : sk_shares[h]) pt.U64(v);
      pt.U8(static_cast<uint8_t>(b_shares[h].size()));
      for (uint64_t v : b_shares[h]) pt.U64(v);
      out.U32(j);
      out.Blob(suite_.Seal(live[h]->share_key, Tag(AggRound::kShareKeys),
                           pt.str()));
      cost += cost_.cipher_fixed;
    }
  }
  Post(i, kServerId, AggRound::kShareKeys, out.Take(), cost);
  c.round = 2;
  DropIf(i, AggRound::kShareKeys, DropPhase::kAfter);
  return absl::OkStatus();
}

absl::Status AggregationRun::ShareKeys() {
  for (PartyId i : u1_) {
    if (!Alive(i)) continue;
    Stopwatch sw;
    double cost = 0.0;
    DHDMM_RETURN_IF_ERROR(ClientShareKeys(clients_[i], cost));
    net_.Compute(i, cost, sw.Seconds());
  }

  Stopwatch sw;
  double cost = 0.0;
  // Ciphertexts are relayed as views into the received bundles.
  std::vector<std::vector<std::pair<PartyId, std::string_view>>> outbox(n_);
  std::vector<bool> in_u1(n_, false);
  for (PartyId i : u1_) in_u1[i] = true;
  const std::vector<Message> bundles = net_.Receive(kServerId);
  for (const Message& m : bundles) {
    DHDMM_ASSIGN_OR_RETURN(Envelope env, Accept(m, AggRound::kShareKeys, cost));
    ByteReader r(std::string_view(m.bytes).substr(kEnvelopeHeaderBytes,
                                                  env.payload.size()));
    uint32_t count = r.U32();
    std::vector<PartyId> targets;
    for (uint32_t e = 0; e < count && r.ok(); ++e) {
      PartyId j = r.U32();
      std::string_view ct = r.Blob();
      if (!r.ok() || j >= n_ || !in_u1[j] || !IsNeighbor(m.from, j)) {
        return Malformed(m, "bad share bundle");
      }
      targets.push_back(j);
      outbox[j].emplace_back(m.from, ct);
    }
    if (!r.done()) return Malformed(m, "trailing bytes in share bundle");
    share_targets_[m.from] = std::move(targets);
    u2_.push_back(m.from);
  }
  std::sort(u2_.begin(), u2_.end());
  for (PartyId j : u2_) {
    ByteWriter w;
    const auto& box = outbox[j];
    size_t bytes = 4;
    for (const auto& entry : box) bytes += 8 + entry.second.size();
    w.Reserve(bytes);
    w.U32(static_cast<uint32_t>(box.size()));
    for (const auto& [from, ct] : box) {
      w.U32(from);
      w.Blob(ct);
    }
    Post(kServerId, j, AggRound::kShareKeys, w.Take(), cost);
  }
  net_.Compute(kServerId, cost, sw.Seconds());
  net_.MarkRound(RoundName(AggRound::kShareKeys));
  return absl::OkStatus();
}

absl::Status AggregationRun::ClientMaskedInput(ClientState& c, double& cost) {
  const PartyId i = c.id;
  DHDMM_ASSIGN_OR_RETURN(Envelope env,
                         AcceptFromServer(i, AggRound::kShareKeys, cost));
  Message link{kServerId, i, Tag(AggRound::kShareKeys), "", 0, 0};
  ByteReader r(env.payload);
  uint32_t count = r.U32();
  size_t held = 0;
  for (uint32_t e = 0; e < count && r.ok(); ++e) {
    PartyId from = r.U32();
    std::string_view ct = r.Blob();
    Peer* peer = r.ok() ? c.Find(from) : nullptr;
    if (peer == nullptr || !peer->live || peer->held) {
      return Malformed(link, "share from a non-neighbour");
    }
    cost += cost_.cipher_fixed;
    auto pt = suite_.Open(peer->share_key, Tag(AggRound::kShareKeys), ct);
    if (!pt.ok()) return Malformed(link, "share ciphertext rejected");
    ByteReader pr(*pt);
    PartyId owner = pr.U32();
    PartyId holder = pr.U32();
    peer->secret_key_share.resize(pr.U8());
    for (auto& v : peer->secret_key_share) v = pr.U64();
    peer->self_mask_share.resize(pr.U8());
    for (auto& v : peer->self_mask_share) v = pr.U64();
    if (!pr.done() || owner != from || holder != i) {
      return Malformed(link, "share addressed to the wrong pair");
    }
    peer->held = true;
    ++held;
  }
  if (!r.done()) return Malformed(link, "trailing bytes in share relay");

  DropIf(i, AggRound::kMaskedInput, DropPhase::kBefore);
  if (!Alive(i)) return absl::OkStatus();

  EncodedVector y = inputs_[i];
  const uint64_t p = cfg_.p;
  if (params_.degree > 0) {
    fieldcodec::FieldAddInPlace(y, suite_.Expand(c.self_seed, length_, p), p);
  }
  for (const Peer& peer : c.peers) {
    if (!peer.held) continue;
    EncodedVector mask = suite_.Expand(SeedView(peer.mask_seed), length_, p);
    if (peer.id > i) {
      fieldcodec::FieldAddInPlace(y, mask, p);
    } else {
      fieldcodec::FieldSubInPlace(y, mask, p);
    }
  }
  cost += (cost_.prg_element + cost_.field_op) * length_ * (1 + held);
  Post(i, kServerId, AggRound::kMaskedInput, fieldcodec::Serialize(y), cost);
  c.round = 3;
  DropIf(i, AggRound::kMaskedInput, DropPhase::kAfter);
  return absl::OkStatus();
}

absl::Status AggregationRun::MaskedInput() {
  for (PartyId i : u2_) {
    if (!Alive(i)) continue;
    Stopwatch sw;
    double cost = 0.0;
    DHDMM_RETURN_IF_ERROR(ClientMaskedInput(clients_[i], cost));
    net_.Compute(i, cost, sw.Seconds());
  }

  Stopwatch sw;
  double cost = 0.0;
  std::vector<bool> in_u2(n_, false);
  for (PartyId i : u2_) in_u2[i] = true;
  for (const Message& m : net_.Receive(kServerId)) {
    DHDMM_ASSIGN_OR_RETURN(Envelope env, Accept(m, AggRound::kMaskedInput, cost));
    auto y = fieldcodec::Deserialize(AsBytes(env.payload), cfg_.p);
    if (!y.ok() || y->size() != length_ || !in_u2[m.from]) {
      return Malformed(m, "bad masked input");
    }
    if (hooks_.input_validator) {
      DHDMM_RETURN_IF_ERROR(hooks_.input_validator(m.from, *y));
    }
    cost += cost_.field_op * length_;
    masked_[m.from] = std::move(*y);
    u3_.push_back(m.from);
  }
  std::sort(u3_.begin(), u3_.end());
  net_.Compute(kServerId, cost, sw.Seconds());
  net_.MarkRound(RoundName(AggRound::kMaskedInput));
  return absl::OkStatus();
}

absl::Status AggregationRun::ConsistencyCheck() {
  Stopwatch sw;
  double cost = 0.0;
  const std::string truth = EncodeIdList(u3_);
  for (PartyId i : u3_) {
    std::string claim = truth;
    if (hooks_.forged_claim && hooks_.forged_claim->first == i) {
      claim = EncodeIdList(hooks_.forged_claim->second);
    }
    claim_sent_[i] = claim;
    Post(kServerId, i, AggRound::kConsistencyCheck, claim, cost);
  }
  net_.Compute(kServerId, cost, sw.Seconds());

  for (PartyId i : u3_) {
    if (!Alive(i)) continue;
    Stopwatch csw;
    double ccost = 0.0;
    ClientState& c = clients_[i];
    DHDMM_ASSIGN_OR_RETURN(
        Envelope env, AcceptFromServer(i, AggRound::kConsistencyCheck, ccost));
    std::vector<PartyId> claimed;
    if (!DecodeIdList(env.payload, claimed) ||
        !std::binary_search(claimed.begin(), claimed.end(), i)) {
      return MakeError(ErrorKind::kAbortInconsistentSurvivors,
                       absl::StrCat("client ", i,
                                    " rejected a survivor set that omits it"));
    }
    c.claim = env.payload;
    DropIf(i, AggRound::kConsistencyCheck, DropPhase::kBefore);
    if (!Alive(i)) continue;
    std::string echo =
        suite_.Sign(c.signing.secret_key, absl::StrCat(kClaimLabel, c.claim));
    ccost += cost_.sign;
    ByteWriter w;
    w.Blob(echo);
    Post(i, kServerId, AggRound::kConsistencyCheck, w.Take(), ccost);
    c.round = 4;
    net_.Compute(i, ccost, csw.Seconds());
    DropIf(i, AggRound::kConsistencyCheck, DropPhase::kAfter);
  }

  Stopwatch ssw;
  cost = 0.0;
  for (const Message& m : net_.Receive(kServerId)) {
    DHDMM_ASSIGN_OR_RETURN(Envelope env,
                           Accept(m, AggRound::kConsistencyCheck, cost));
    ByteReader r(env.payload);
    std::string_view echo = r.Blob();
    if (!r.done()) return Malformed(m, "bad survivor echo");
    echo_[m.from] = std::string(echo);
    u4_.push_back(m.from);
  }
  std::sort(u4_.begin(), u4_.end());
  net_.Compute(kServerId, cost, ssw.Seconds());
  net_.MarkRound(RoundName(AggRound::kConsistencyCheck));
  return absl::OkStatus();
}

absl::Status AggregationRun::ClientRespond(ClientState& c, double& cost) {
  const PartyId i = c.id;
  DHDMM_ASSIGN_OR_RETURN(Envelope env,
                         AcceptFromServer(i, AggRound::kUnmask, cost));
  Message link{kServerId, i, Tag(AggRound::kUnmask), "", 0, 0};
  ByteReader r(env.payload);
  std::string claim(r.Blob());
  if (!r.ok()) return Malformed(link, "bad unmask request");
  std::vector<PartyId> survivors;
  if (!DecodeIdList(claim, survivors)) {
    return Malformed(link, "bad survivor list");
  }
  if (malicious_) {
    if (claim != c.claim) {
      return MakeError(ErrorKind::kAbortInconsistentSurvivors,
                       absl::StrCat("client ", i,
                                    " saw the survivor set change"));
    }
    uint32_t count = r.U32();
    int64_t confirmed = 0;
    for (uint32_t e = 0; e < count && r.ok(); ++e) {
      PartyId j = r.U32();
      std::string_view echo = r.Blob();
      if (!r.ok() || j >= n_ || !IsNeighbor(i, j)) {
        return Malformed(link, "bad echo list");
      }
      cost += cost_.verify;
      if (!suite_.Verify(SigningKey(j), absl::StrCat(kClaimLabel, claim),
                         echo)) {
        return MakeError(
            ErrorKind::kAbortInconsistentSurvivors,
            absl::StrCat("client ", i, ": neighbour ", j,
                         " acknowledged a different survivor set"));
      }
      ++confirmed;
    }
    if (confirmed < t_) {
      return MakeError(ErrorKind::kAbortInsufficientShares,
                       absl::StrCat("client ", i, ": only ", confirmed,
                                    " neighbours confirmed the survivor set, "
                                    "threshold ", t_));
    }
  }
  if (!r.done()) return Malformed(link, "trailing bytes in unmask request");

  DropIf(i, AggRound::kUnmask, DropPhase::kBefore);
  if (!Alive(i)) return absl::OkStatus();

  // One share type per neighbour: the self-mask seed of a survivor or the
  // key of a client that dropped out.
  ByteWriter w;
  uint32_t held = 0;
  for (const Peer& peer : c.peers) held += peer.held;
  w.U32(held);
  for (const Peer& peer : c.peers) {
    if (!peer.held) continue;
    bool survived =
        std::binary_search(survivors.begin(), survivors.end(), peer.id);
    const auto& chunks =
        survived ? peer.self_mask_share : peer.secret_key_share;
    w.U32(peer.id);
    w.U8(survived ? kShareSelfMask : kShareSecretKey);
    w.U8(static_cast<uint8_t>(chunks.size()));
    for (uint64_t v : chunks) w.U64(v);
  }
  Post(i, kServerId, AggRound::kUnmask, w.Take(), cost);
  c.round = 5;
  DropIf(i, AggRound::kUnmask, DropPhase::kAfter);
  return absl::OkStatus();
}

absl::Status AggregationRun::Unmask() {
  Stopwatch sw;
  double cost = 0.0;
  const std::vector<PartyId>& recipients = malicious_ ? u4_ : u3_;
  const std::string truth = EncodeIdList(u3_);
  std::vector<bool> in_u4(n_, false);
  for (PartyId i : u4_) in_u4[i] = true;
  for (PartyId i : recipients) {
    ByteWriter w;
    if (malicious_) {
      w.Blob(claim_sent_[i]);
      std::vector<PartyId> echoes;
      for (PartyId j : graph_.neighbors[i]) {
        if (in_u4[j]) echoes.push_back(j);
      }
      w.U32(static_cast<uint32_t>(echoes.size()));
      for (PartyId j : echoes) {
        w.U32(j);
        w.Blob(echo_[j]);
      }
    } else {
      w.Blob(truth);
    }
    Post(kServerId, i, AggRound::kUnmask, w.Take(), cost);
  }
  net_.Compute(kServerId, cost, sw.Seconds());

  for (PartyId i : recipients) {
    if (!Alive(i)) continue;
    Stopwatch csw;
    double ccost = 0.0;
    DHDMM_RETURN_IF_ERROR(ClientRespond(clients_[i], ccost));
    net_.Compute(i, ccost, csw.Seconds());
  }

  Stopwatch ssw;
  cost = 0.0;
  using ShareList = std::vector<std::pair<uint64_t, std::vector<uint64_t>>>;
  std::map<PartyId, ShareList> self_mask_shares, key_shares;
  for (const Message& m : net_.Receive(kServerId)) {
    DHDMM_ASSIGN_OR_RETURN(Envelope env, Accept(m, AggRound::kUnmask, cost));
    ByteReader r(env.payload);
    uint32_t count = r.U32();
    for (uint32_t e = 0; e < count && r.ok(); ++e) {
      PartyId j = r.U32();
      uint8_t type = r.U8();
      std::vector<uint64_t> chunks(r.U8());
      for (auto& v : chunks) v = r.U64();
      if (!r.ok() || j >= n_ || type > kShareSecretKey) {
        return Malformed(m, "bad share response");
      }
      auto& dest = type == kShareSelfMask ? self_mask_shares : key_shares;
      dest[j].emplace_back(static_cast<uint64_t>(m.from) + 1, std::move(chunks));
    }
    if (!r.done()) return Malformed(m, "trailing bytes in share response");
  }
  net_.Compute(kServerId, cost, ssw.Seconds());
  Stopwatch rsw;
  absl::Status st = ServerRecover(self_mask_shares, key_shares);
  net_.Compute(kServerId, 0.0, rsw.Seconds());
  net_.MarkRound(RoundName(AggRound::kUnmask));
  return st;
}

absl::Status AggregationRun::ServerRecover(
    const std::map<PartyId, std::vector<std::pair<uint64_t, std::vector<uint64_t>>>>& self_mask_shares,
    const std::map<PartyId, std::vector<std::pair<uint64_t, std::vector<uint64_t>>>>& key_shares) {
  const uint64_t p = cfg_.p;
  double cost = 0.0;
  auto recover = [&](PartyId owner, const auto& table,
                     const char* what) -> absl::StatusOr<std::string> {
    auto it = table.find(owner);
    size_t have = it == table.end() ? 0 : it->second.size();
    if (have < static_cast<size_t>(t_)) {
      return MakeError(ErrorKind::kAbortInsufficientShares,
                       absl::StrCat("only ", have, " shares of the ", what,
                                    " of client ", owner, ", threshold ", t_));
    }
    std::vector<uint64_t> xs;
    std::vector<std::vector<uint64_t>> ys;
    for (const auto& [x, y] : it->second) {
      xs.push_back(x);
      ys.push_back(y);
    }
    cost += cost_.field_op * t_ * (t_ + 8);
    auto secret = RecoverBytes(xs, ys, t_, suite_.secret_bytes());
    if (!secret.ok()) {
      return MakeError(ErrorKind::kAbortInsufficientShares,
                       absl::StrCat("could not reconstruct the ", what,
                                    " of client ", owner, ": ",
                                    std::string(secret.status().message())));
    }
    return secret;
  };

  sum_.elements.assign(length_, 0);
  for (PartyId u : u3_) fieldcodec::FieldAddInPlace(sum_, masked_[u], p);

  if (params_.degree > 0) {
    for (PartyId u : u3_) {
      DHDMM_ASSIGN_OR_RETURN(std::string b,
                             recover(u, self_mask_shares, "self-mask seed"));
      fieldcodec::FieldSubInPlace(sum_, suite_.Expand(b, length_, p), p);
      cost += (cost_.prg_element + cost_.field_op) * length_;
    }
  }

  std::vector<bool> in_u3(n_, false);
  for (PartyId u : u3_) in_u3[u] = true;
  for (PartyId d : u2_) {
    if (in_u3[d]) continue;
    std::vector<PartyId> masked_with;
    for (PartyId u : share_targets_[d]) {
      if (in_u3[u]) masked_with.push_back(u);
    }
    if (masked_with.empty()) continue;
    DHDMM_ASSIGN_OR_RETURN(std::string sk, recover(d, key_shares, "secret key"));
    for (PartyId u : masked_with) {
      auto shared = suite_.Agree(sk, server_pk_[u]);
      if (!shared.ok()) {
        return MakeError(ErrorKind::kRecoveryFailure,
                         absl::StrCat("recovered key of client ", d,
                                      " is unusable"));
      }
      Seed32 seed =
          suite_.Kdf("dhdmm.secagg.mask", PairContext(*shared, u, d));
      EncodedVector mask = suite_.Expand(SeedView(seed), length_, p);
      // Survivor u added +mask when d > u and -mask otherwise.
      if (d > u) {
        fieldcodec::FieldSubInPlace(sum_, mask, p);
      } else {
        fieldcodec::FieldAddInPlace(sum_, mask, p);
      }
      cost += cost_.key_agreement + (cost_.prg_element + cost_.field_op) * length_;
    }
  }
  net_.Compute(kServerId, cost);
  return absl::OkStatus();
}

absl::StatusOr<AggResult> AggregationRun::Run(
    std::span<const DropoutEvent> dropouts) {
  DHDMM_ASSIGN_OR_RETURN(graph_, BuildGraph(n_, params_.degree, seed_));
  params_.degree = graph_.degree;

  for (const DropoutEvent& e : dropouts) {
    uint8_t round = e.round;
    DropPhase phase = e.phase;
    if (!malicious_ && round == Tag(AggRound::kConsistencyCheck)) {
      round = Tag(AggRound::kUnmask);
      phase = DropPhase::kBefore;
    }
    drop_.emplace(std::make_pair(e.client, round), phase);
    transcript_.dropouts.push_back(e);
  }

  Rng master(seed_);
  clients_.resize(n_);
  for (PartyId i = 0; i < n_; ++i) {
    ClientState& c = clients_[i];
    c.id = i;
    c.peers.resize(graph_.neighbors[i].size());
    for (size_t h = 0; h < c.peers.size(); ++h) {
      c.peers[h].id = graph_.neighbors[i][h];
    }
    Rng rng = master.Derive("secagg.client.keys", i);
    c.agreement = suite_.AgreementKeyPair(rng);
    if (malicious_) c.signing = suite_.SigningKeyPair(rng);
    c.self_seed.resize(suite_.secret_bytes());
    rng.Fill({reinterpret_cast<uint8_t*>(c.self_seed.data()), c.self_seed.size()});
  }
  if (malicious_) {
    Rng rng = master.Derive("secagg.server.keys");
    server_signing_ = suite_.SigningKeyPair(rng);
    if (hooks_.record_transcript) {
      transcript_.signing_keys[kServerId] = server_signing_.public_key;
      for (const ClientState& c : clients_) {
        transcript_.signing_keys[c.id] = c.signing.public_key;
      }
    }
  }

  DHDMM_RETURN_IF_ERROR(AdvertiseKeys());
  DHDMM_RETURN_IF_ERROR(ShareKeys());
  DHDMM_RETURN_IF_ERROR(MaskedInput());
  if (malicious_) DHDMM_RETURN_IF_ERROR(ConsistencyCheck());
  DHDMM_RETURN_IF_ERROR(Unmask());

  AggResult result;
  result.sum = std::move(sum_);
  result.survivors = u3_;
  std::set<PartyId> dropped;
  for (const auto& [key, phase] : drop_) {
    if (net_.IsDropped(key.first)) dropped.insert(key.first);
  }
  result.dropped.assign(dropped.begin(), dropped.end());
  result.degree = params_.degree;
  result.threshold = params_.threshold;
  result.degree_adjusted = graph_.degree_adjusted;
  result.transcript = std::move(transcript_);
  return result;
}

}  // namespace

const char* ModeName(SecurityMode mode) {
  return mode == SecurityMode::kMalicious ? "malicious" : "semi-honest";
}

std::optional<SecurityMode> ParseMode(std::string_view name) {
  if (name == "semi-honest" || name == "semi_honest") {
    return SecurityMode::kSemiHonest;
  }
  if (name == "malicious") return SecurityMode::kMalicious;
  return std::nullopt;
}

absl::Status AggConfig::Validate() const { return ResolveAggParams(*this).status(); }

absl::StatusOr<AggParams> ResolveAggParams(const AggConfig& cfg) {
  if (cfg.n < 1) return MakeError(ErrorKind::kInvalidConfig, "n must be >= 1");
  if (!(cfg.max_dropout_fraction >= 0.0 && cfg.max_dropout_fraction < 1.0)) {
    return MakeError(ErrorKind::kInvalidConfig,
                     "max_dropout_fraction must lie in [0, 1)");
  }
  if (cfg.p <= 2 || !fieldcodec::IsPrime(cfg.p)) {
    return MakeError(ErrorKind::kInvalidConfig, "aggregation modulus must be an odd prime");
  }
  AggParams out;
  if (cfg.k_neighbors > 0) {
    out.degree = cfg.k_neighbors;
  } else {
    if (!(cfg.degree_factor > 0.0)) {
      return MakeError(ErrorKind::kInvalidConfig, "degree factor must be positive");
    }
    double log_n = cfg.n > 1 ? std::log2(static_cast<double>(cfg.n)) : 0.0;
    int64_t k = static_cast<int64_t>(std::ceil(cfg.degree_factor * log_n - 1e-9));
    out.degree = std::min<int64_t>(cfg.n - 1, std::max<int64_t>(3, k));
  }
  if (out.degree >= cfg.n || (out.degree < 3 && out.degree != cfg.n - 1)) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat("neighbour count ", out.degree,
                                  " invalid for ", cfg.n, " clients"));
  }
  // The graph builder may raise an odd degree by one.
  int64_t degree = out.degree;
  if ((cfg.n * degree) % 2 == 1) degree = degree + 1 < cfg.n ? degree + 1 : degree - 1;
  out.degree = degree;
  out.threshold = cfg.threshold > 0 ? cfg.threshold : degree / 2 + 1;
  if (degree == 0) out.threshold = 0;
  if (degree > 0 && (out.threshold > degree || 2 * out.threshold <= degree)) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat("threshold ", out.threshold,
                                  " must satisfy k/2 < t <= k for k = ", degree));
  }
  return out;
}

absl::StatusOr<AggResult> RunAggregation(
    const std::vector<EncodedVector>& inputs, const AggConfig& cfg,
    simnet::SimNet& net, std::span<const DropoutEvent> dropouts, uint64_t seed,
    const AggHooks& hooks) {
  DHDMM_ASSIGN_OR_RETURN(AggParams params, ResolveAggParams(cfg));
  if (static_cast<int64_t>(inputs.size()) != cfg.n || net.num_clients() != cfg.n) {
    return MakeError(ErrorKind::kDimensionError,
                     absl::StrCat("expected ", cfg.n, " inputs, got ",
                                  inputs.size()));
  }
  for (const auto& v : inputs) {
    if (v.size() != inputs[0].size()) {
      return MakeError(ErrorKind::kDimensionError, "input vectors differ in length");
    }
    for (uint64_t e : v.elements) {
      if (e >= cfg.p) {
        return MakeError(ErrorKind::kRangeOverflow, "input not reduced mod p");
      }
    }
  }
  std::set<PartyId> droppers;
  for (const DropoutEvent& e : dropouts) {
    if (e.client >= cfg.n || e.round < 1 || e.round > 5) {
      return MakeError(ErrorKind::kInvalidConfig,
                       absl::StrCat("bad dropout event for client ", e.client));
    }
    droppers.insert(e.client);
  }
  const double allowed = std::floor(cfg.max_dropout_fraction * cfg.n + 1e-9);
  if (static_cast<double>(droppers.size()) > allowed) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat(droppers.size(),
                                  " clients scheduled to drop, at most ",
                                  allowed, " allowed"));
  }
  AggregationRun run(inputs, cfg, params, net, hooks, seed);
  return run.Run(dropouts);
}

}  // namespace dhdmm::secagg
