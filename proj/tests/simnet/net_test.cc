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

#include <string>

#include "dhdmm/status.h"
#include "gtest/gtest.h"

namespace dhdmm::simnet {
namespace {

TEST(DeliveryTimeTest, OneMegabyteOverOneMegabit) {
  EXPECT_DOUBLE_EQ(DeliveryTime(0.0, 1e6, 125000, 125000, 0.1), 8.1);
}

TEST(DeliveryTimeTest, UnlimitedAndEmpty) {
  EXPECT_EQ(DeliveryTime(2.5, 1e9, kUnlimited, kUnlimited, 0.0), 2.5);
  EXPECT_EQ(DeliveryTime(2.5, 0, 10, 10, 0.25), 2.75);
}

TEST(DeliveryTimeTest, SlowerLinkBinds) {
  EXPECT_DOUBLE_EQ(DeliveryTime(1.0, 1000, 100, 1000, 0.0), 11.0);
  EXPECT_DOUBLE_EQ(DeliveryTime(1.0, 1000, kUnlimited, 500, 0.0), 3.0);
}

TEST(NetConfigTest, Validate) {
  NetConfig ok;
  EXPECT_TRUE(ok.Validate().ok());
  NetConfig bad_bw;
  bad_bw.client_up_bw = 0;
  EXPECT_TRUE(HasErrorKind(bad_bw.Validate(), ErrorKind::kInvalidConfig));
  NetConfig bad_lat;
  bad_lat.latency = -1;
  EXPECT_TRUE(HasErrorKind(bad_lat.Validate(), ErrorKind::kInvalidConfig));
}

TEST(SimNetTest, SingleMessageMatchesDeliveryTime) {
  NetConfig cfg;
  cfg.client_up_bw = 125000;
  cfg.latency = 0.1;
  SimNet net(1, cfg);
  net.Send(0, kServerId, 1, std::string(1000000, 'x'));
  auto msgs = net.Receive(kServerId);
  ASSERT_EQ(msgs.size(), 1u);
  EXPECT_DOUBLE_EQ(msgs[0].delivered_at, 8.1);
  EXPECT_DOUBLE_EQ(net.Now(kServerId), 8.1);
}

TEST(SimNetTest, UplinkSerializesMessages) {
  NetConfig cfg;
  cfg.client_up_bw = 100;
  SimNet net(2, cfg);
  net.Send(0, 1, 1, std::string(100, 'a'));
  net.Send(0, 1, 1, std::string(100, 'b'));
  auto msgs = net.Receive(1);
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_DOUBLE_EQ(msgs[0].delivered_at, 1.0);
  EXPECT_DOUBLE_EQ(msgs[1].delivered_at, 2.0);
  EXPECT_EQ(msgs[0].bytes[0], 'a');
}

TEST(SimNetTest, ServerDownlinkSerializesFanIn) {
  NetConfig cfg;
  cfg.server_bw = 1000;
  SimNet net(3, cfg);
  for (PartyId i = 0; i < 3; ++i) net.Send(i, kServerId, 1, std::string(500, 'z'));
  auto msgs = net.Receive(kServerId);
  ASSERT_EQ(msgs.size(), 3u);
  EXPECT_DOUBLE_EQ(msgs[2].delivered_at, 1.5);
  // Ties broken by sender id.
  EXPECT_EQ(msgs[0].from, 0u);
  EXPECT_EQ(msgs[1].from, 1u);
  EXPECT_EQ(msgs[2].from, 2u);
}

TEST(SimNetTest, ComputeAdvancesClock) {
  SimNet net(1, NetConfig{});
  net.Compute(0, 0.5, 0.01);
  net.Send(0, kServerId, 1, "hi");
  auto msgs = net.Receive(kServerId);
  ASSERT_EQ(msgs.size(), 1u);
  EXPECT_DOUBLE_EQ(msgs[0].delivered_at, 0.5);
  auto m = net.Metrics();
  EXPECT_DOUBLE_EQ(m.clients[0].compute_s, 0.5);
  EXPECT_DOUBLE_EQ(m.clients[0].wall_s, 0.01);
  EXPECT_DOUBLE_EQ(m.total_time_s, 0.5);
}

TEST(SimNetTest, ConservationWithDropout) {
  SimNet net(3, NetConfig{});
  net.Send(kServerId, 0, 1, std::string(10, 'a'));
  net.Send(kServerId, 1, 1, std::string(20, 'b'));
  net.Send(kServerId, 2, 1, std::string(30, 'c'));
  net.Drop(1);
  net.Send(1, kServerId, 1, "ignored");
  net.Send(0, kServerId, 1, std::string(7, 'd'));
  net.Send(kServerId, 1, 2, std::string(5, 'e'));
  EXPECT_TRUE(net.Receive(1).empty());
  EXPECT_EQ(net.Receive(0).size(), 1u);
  EXPECT_EQ(net.Receive(2).size(), 1u);
  EXPECT_EQ(net.Receive(kServerId).size(), 1u);
  auto m = net.Metrics();
  EXPECT_EQ(m.bytes_to_dropped, 25);
  EXPECT_EQ(m.TotalBytesSent(), m.TotalBytesReceived() + m.bytes_to_dropped);
  EXPECT_EQ(m.clients[1].bytes_sent, 0);
}

TEST(SimNetTest, TamperFlipsOneByteOnce) {
  SimNet net(1, NetConfig{});
  net.SetTamper({.round = 2, .from = 0, .to = kServerId, .byte_index = 1,
                 .xor_mask = 0x80});
  net.Send(0, kServerId, 1, "abc");
  net.Send(0, kServerId, 2, "abc");
  net.Send(0, kServerId, 2, "abc");
  auto msgs = net.Receive(kServerId);
  ASSERT_EQ(msgs.size(), 3u);
  EXPECT_EQ(msgs[0].bytes, "abc");
  EXPECT_EQ(msgs[1].bytes[1], static_cast<char>('b' ^ 0x80));
  EXPECT_EQ(msgs[2].bytes, "abc");
  EXPECT_TRUE(net.tamper_applied());
}

TEST(SimNetTest, LatencyMonotone) {
  double prev = -1;
  for (double lat : {0.0, 0.05, 0.1, 0.5}) {
    NetConfig cfg;
    cfg.latency = lat;
    cfg.client_up_bw = 1000;
    SimNet net(4, cfg);
    for (PartyId i = 0; i < 4; ++i) net.Send(i, kServerId, 1, std::string(300, 'x'));
    net.Receive(kServerId);
    for (PartyId i = 0; i < 4; ++i) net.Send(kServerId, i, 1, std::string(300, 'y'));
    for (PartyId i = 0; i < 4; ++i) net.Receive(i);
    double t = net.Metrics().total_time_s;
    EXPECT_GE(t, prev);
    prev = t;
  }
}

TEST(SimNetTest, RoundMarksAndOutputs) {
  SimNet net(2, NetConfig{});
  net.Compute(1, 2.0);
  net.MarkRound("first");
  auto m = net.Metrics();
  ASSERT_EQ(m.round_timestamps.size(), 1u);
  EXPECT_EQ(m.round_timestamps[0].first, "first");
  EXPECT_DOUBLE_EQ(m.round_timestamps[0].second, 2.0);
  auto js = m.SummaryJson();
  EXPECT_EQ(js["clients"], 2);
  EXPECT_FALSE(js.dump().find("wall") != std::string::npos);
  std::string csv = m.PartyCsv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

}  // namespace
}  // namespace dhdmm::simnet
