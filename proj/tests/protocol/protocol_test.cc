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

#include "dhdmm/protocol/protocol.h"

#include <cmath>
#include <set>

#include "dhdmm/baselines/baselines.h"
#include "dhdmm/status.h"
#include "dhdmm/workloads/workloads.h"
#include "gtest/gtest.h"
#include "testing/stats.h"

namespace dhdmm::protocol {
namespace {

using matmech::DomainSpec;
using matmech::Matrix;
using matmech::MeasurementPlan;
using matmech::Record;
using matmech::Strategy;
using matmech::Vector;
using matmech::Workload;

ProtocolParams Params(int64_t n, uint64_t seed = 1) {
  ProtocolParams p;
  p.n = n;
  p.seed = seed;
  p.agg.suite = secagg::SuiteKind::kInsecureFast;
  p.agg.max_dropout_fraction = 0.5;
  return p;
}

PreparedStrategy Prepared(const Workload& w, const Matrix& a) {
  auto strategy = Strategy::Create(a, w.domain()).value();
  return PreparedStrategy{MeasurementPlan::Create(w, strategy).value(), 0.0,
                          "fixed"};
}

std::vector<ClientInput> Inputs(const DomainSpec& dom, int64_t n,
                                int64_t records, uint64_t seed) {
  auto all = workloads::SyntheticRecords(dom, records, seed);
  auto parts = workloads::Partition(all, n, seed + 1);
  std::vector<ClientInput> out(n);
  for (int64_t i = 0; i < n; ++i) out[i].records = std::move(parts[i]);
  return out;
}

Vector PooledExact(const MeasurementPlan& plan,
                   const std::vector<ClientInput>& inputs) {
  std::vector<Record> all;
  for (const auto& c : inputs) all.insert(all.end(), c.records.begin(), c.records.end());
  return plan.Exact(matmech::Vectorize(all, plan.workload().domain()).value())
      .value();
}

DomainSpec Small() { return DomainSpec::Create({{"a", 4}, {"b", 2}}).value(); }

TEST(StrategyWireTest, RoundTrip) {
  Matrix a = Matrix::Random(5, 3);
  a(0, 0) = -0.0;
  std::string bytes = SerializeStrategy(a);
  EXPECT_EQ(bytes.size(), 16u + 15 * 8);
  auto back = DeserializeStrategy(bytes, 3);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(SerializeStrategy(*back), bytes);
  EXPECT_FALSE(DeserializeStrategy(bytes, 4).ok());
  EXPECT_FALSE(DeserializeStrategy(bytes.substr(0, bytes.size() - 1), 3).ok());
  EXPECT_FALSE(DeserializeStrategy(bytes + "x", 3).ok());
  EXPECT_FALSE(DeserializeStrategy("", 3).ok());
  Matrix bad = a;
  bad(1, 1) = std::nan("");
  EXPECT_FALSE(DeserializeStrategy(SerializeStrategy(bad), 3).ok());
}

TEST(ServerRound1Test, IdentityWorkloadShape) {
  DomainSpec dom = DomainSpec::Create({{"a", 4}}).value();
  auto w = workloads::BuildIdentity(dom).value();
  auto r1 = ServerRound1(Params(3), w);
  ASSERT_TRUE(r1.ok()) << r1.status();
  EXPECT_EQ(r1->plan.strategy().matrix().cols(), 4);
  EXPECT_GT(r1->optimizer_flops, 0.0);
}

TEST(ServerRound1Test, BroadcastIsCountedAndIdentical) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 1).value();
  const int64_t n = 6;
  auto inputs = Inputs(dom, n, 30, 3);
  auto result = RunProtocol(Params(n), w, inputs);
  ASSERT_TRUE(result.ok()) << result.status();
  const size_t wire = SerializeStrategy(result->strategy).size();
  EXPECT_GE(result->metrics.server.bytes_sent, static_cast<int64_t>(n * wire));
  for (const auto& c : result->clients) {
    EXPECT_EQ(c.delta2, result->clients[0].delta2);
    EXPECT_GE(result->metrics.clients[0].bytes_received,
              static_cast<int64_t>(wire));
  }
  EXPECT_NEAR(result->clients[0].delta2, matmech::Sensitivity(result->strategy),
              0.0);
}

TEST(ClientRound2Test, EmptyInputEncodesZero) {
  DomainSpec dom = Small();
  ProtocolParams p = Params(1);
  p.noise_disabled = true;
  Rng rng(1);
  auto out = ClientRound2(p, dom, SerializeStrategy(Matrix::Identity(8, 8)),
                          ClientInput{}, rng);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out->encoded.elements, std::vector<uint64_t>(8, 0));
  EXPECT_EQ(out->sigma2, 0.0);
  EXPECT_EQ(out->delta2, 1.0);
}

TEST(ClientRound2Test, OneRecordIsScaledOneHot) {
  DomainSpec dom = Small();
  ProtocolParams p = Params(1);
  p.noise_disabled = true;
  p.gamma = 10;
  Rng rng(1);
  ClientInput in{{Record{2, 1}}};
  auto out = ClientRound2(p, dom, SerializeStrategy(Matrix::Identity(8, 8)), in, rng);
  ASSERT_TRUE(out.ok());
  std::vector<uint64_t> expected(8, 0);
  expected[dom.Flatten(in.records[0])] = 10;
  EXPECT_EQ(out->encoded.elements, expected);
}

TEST(ClientRound2Test, NoiseUsesLocalSensitivity) {
  DomainSpec dom = Small();
  ProtocolParams p = Params(10);
  p.rho = 0.5;
  p.gamma = 100;
  Rng rng(1);
  auto out = ClientRound2(p, dom, SerializeStrategy(3.0 * Matrix::Identity(8, 8)),
                          ClientInput{}, rng);
  ASSERT_TRUE(out.ok());
  EXPECT_DOUBLE_EQ(out->delta2, 3.0);
  EXPECT_DOUBLE_EQ(out->sigma2, 100.0 * 100.0 * 9.0 / (2.0 * 10 * 0.5));
}

TEST(ClientRound2Test, OverflowIsRangeOverflow) {
  DomainSpec dom = Small();
  ProtocolParams p = Params(1);
  p.noise_disabled = true;
  p.p = 1009;
  Rng rng(1);
  ClientInput in{std::vector<Record>(20, Record{0, 0})};
  auto out = ClientRound2(p, dom, SerializeStrategy(Matrix::Identity(8, 8)), in, rng);
  EXPECT_TRUE(HasErrorKind(out.status(), ErrorKind::kRangeOverflow));
}

TEST(RunProtocolTest, SingleClientExactHistogram) {
  DomainSpec dom = Small();
  auto w = workloads::BuildIdentity(dom).value();
  ProtocolParams p = Params(1);
  p.noise_disabled = true;
  p.gamma = 1000;
  RunOptions opts;
  opts.strategy = Prepared(w, Matrix::Identity(8, 8));
  auto inputs = Inputs(dom, 1, 25, 4);
  auto r = RunProtocol(p, w, inputs, opts);
  ASSERT_TRUE(r.ok()) << r.status();
  Vector exact = PooledExact(opts.strategy->plan, inputs);
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    EXPECT_EQ(r->answer(i), exact(i));
  }
}

TEST(RunProtocolTest, NoiseDisabledWithinTruncationBound) {
  for (uint64_t seed = 0; seed < 8; ++seed) {
    DomainSpec dom = DomainSpec::Create({{"a", 4}, {"b", 2}, {"c", 2}}).value();
    auto w = workloads::BuildMarginals(dom, 2).value();
    const int64_t n = 5 + seed * 3;
    ProtocolParams p = Params(n, seed);
    p.noise_disabled = true;
    auto inputs = Inputs(dom, n, 3 * n, seed);
    auto r = RunProtocol(p, w, inputs);
    ASSERT_TRUE(r.ok()) << r.status();
    auto plan = MeasurementPlan::Create(
        w, Strategy::Create(r->strategy, dom).value()).value();
    Vector exact = PooledExact(plan, inputs);
    Vector bound = TruncationBound(plan.reconstruction(), n, p.gamma);
    for (Eigen::Index q = 0; q < exact.size(); ++q) {
      EXPECT_LE(std::abs(r->answer(q) - exact(q)), bound(q) + 1e-9)
          << "seed " << seed << " query " << q;
    }
  }
}

TEST(RunProtocolTest, PrivacyReportIsRhoPlusKappa) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 1).value();
  ProtocolParams p = Params(12);
  p.theta = 0.25;
  p.gamma = 20;
  auto r = RunProtocol(p, w, Inputs(dom, 12, 20, 5));
  ASSERT_TRUE(r.ok()) << r.status();
  const double delta2 = matmech::Sensitivity(r->strategy);
  EXPECT_EQ(r->privacy.rho_prime,
            p.rho + dpnoise::Kappa(p.Privacy(delta2)).value);
  EXPECT_EQ(r->privacy.honest_clients, 9);
  EXPECT_EQ(r->privacy.realized_honest_clients, 9);
}

TEST(RunProtocolTest, DropoutsLowerRealizedNoise) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 1).value();
  ProtocolParams p = Params(10);
  p.gamma = 10;
  RunOptions opts;
  opts.net.dropout_schedule = {{3, 3, simnet::DropPhase::kBefore},
                               {5, 1, simnet::DropPhase::kBefore}};
  auto r = RunProtocol(p, w, Inputs(dom, 10, 20, 6), opts);
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_EQ(r->survivors.size(), 8u);
  EXPECT_EQ(r->privacy.realized_honest_clients, 8);
  EXPECT_GT(r->privacy.realized_rho_prime, r->privacy.rho_prime);
}

TEST(RunProtocolTest, AnswerIsPostProcessingOfAggregate) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 2).value();
  ProtocolParams p = Params(7);
  auto r = RunProtocol(p, w, Inputs(dom, 7, 14, 7));
  ASSERT_TRUE(r.ok());
  auto plan = MeasurementPlan::Create(
      w, Strategy::Create(r->strategy, dom).value()).value();
  auto again = ServerRound3(p, plan, r->aggregate,
                            static_cast<int64_t>(r->survivors.size()),
                            matmech::Sensitivity(r->strategy));
  ASSERT_TRUE(again.ok());
  ASSERT_EQ(again->answer.size(), r->answer.size());
  for (Eigen::Index i = 0; i < r->answer.size(); ++i) {
    EXPECT_EQ(std::bit_cast<uint64_t>(again->answer(i)),
              std::bit_cast<uint64_t>(r->answer(i)));
  }
}

TEST(RunProtocolTest, DeterministicInSeed) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 1).value();
  auto inputs = Inputs(dom, 9, 30, 8);
  RunOptions opts;
  opts.net.client_up_bw = 1e5;
  opts.net.latency = 0.02;
  auto a = RunProtocol(Params(9, 42), w, inputs, opts);
  auto b = RunProtocol(Params(9, 42), w, inputs, opts);
  auto c = RunProtocol(Params(9, 43), w, inputs, opts);
  ASSERT_TRUE(a.ok() && b.ok() && c.ok());
  EXPECT_EQ(a->ToJson().dump(), b->ToJson().dump());
  for (size_t i = 0; i < a->metrics.clients.size(); ++i) {
    const auto& x = a->metrics.clients[i];
    const auto& y = b->metrics.clients[i];
    EXPECT_EQ(x.compute_s, y.compute_s);
    EXPECT_EQ(x.bytes_sent, y.bytes_sent);
    EXPECT_EQ(x.bytes_received, y.bytes_received);
  }
  EXPECT_EQ(a->metrics.total_time_s, b->metrics.total_time_s);
  EXPECT_NE(a->ToJson()["answer"], c->ToJson()["answer"]);
}

TEST(RunProtocolTest, EndToEndNoiseLaw) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 1).value();
  const int64_t n = 10;
  // Entries with fractional parts make truncation visible.
  Matrix a(10, 8);
  a << Matrix::Identity(8, 8) * 0.8, Matrix::Constant(2, 8, 0.3);
  PreparedStrategy prepared = Prepared(w, a);
  const double delta2 = prepared.plan.strategy().sensitivity();
  auto inputs = Inputs(dom, n, 40, 9);
  Vector ax = Vector::Zero(10);
  for (const auto& c : inputs) {
    ax += matmech::Measure(a, matmech::Vectorize(c.records, dom).value()).value();
  }
  ProtocolParams p = Params(n);
  p.gamma = 50;
  p.rho = 0.5;
  RunOptions opts;
  opts.strategy = prepared;
  std::vector<double> errors;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    p.seed = seed;
    auto r = RunProtocol(p, w, inputs, opts);
    ASSERT_TRUE(r.ok()) << r.status();
    auto decoded = fieldcodec::Decode(r->aggregate, p.Field());
    for (int j = 0; j < 10; ++j) errors.push_back(decoded[j] - ax(j));
  }
  const double sigma2 = dpnoise::PerClientVariance(p.Privacy(delta2));
  // Each client's floor error is uniform-ish on (-1/gamma, 0].
  const double expected = n * sigma2 / (p.gamma * p.gamma) +
                          n / (12.0 * p.gamma * p.gamma);
  EXPECT_NEAR(testing::Variance(errors) / expected, 1.0, 0.15);
}

TEST(FaultTest, ScaledStrategyRecalibratesClients) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 1).value();
  auto inputs = Inputs(dom, 8, 16, 10);
  ProtocolParams p = Params(8);
  auto honest = RunProtocol(p, w, inputs);
  RunOptions opts;
  opts.faults.strategy_scale = 10.0;
  auto scaled = RunProtocol(p, w, inputs, opts);
  ASSERT_TRUE(honest.ok() && scaled.ok()) << scaled.status();
  for (size_t i = 0; i < inputs.size(); ++i) {
    EXPECT_NEAR(scaled->clients[i].delta2, 10.0 * honest->clients[i].delta2,
                1e-9);
    EXPECT_NEAR(scaled->clients[i].sigma2 / honest->clients[i].sigma2, 100.0,
                1e-9);
  }
  EXPECT_EQ(scaled->privacy.rho, honest->privacy.rho);
  EXPECT_NEAR(scaled->privacy.epsilon, honest->privacy.epsilon, 1e-12);
  EXPECT_LE(scaled->privacy.rho_prime, honest->privacy.rho_prime);
}

TEST(FaultTest, GarbageClientPerturbsWithoutAbort) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 1).value();
  auto inputs = Inputs(dom, 8, 16, 11);
  ProtocolParams p = Params(8);
  auto honest = RunProtocol(p, w, inputs);
  RunOptions opts;
  opts.faults.garbage_clients = {2};
  auto corrupted = RunProtocol(p, w, inputs, opts);
  ASSERT_TRUE(honest.ok() && corrupted.ok()) << corrupted.status();
  EXPECT_EQ(corrupted->survivors.size(), 8u);
  EXPECT_GT((corrupted->answer - honest->answer).norm(), 1.0);
}

TEST(FaultTest, MaliciousTamperAbortsWithEdge) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 1).value();
  ProtocolParams p = Params(6);
  p.mode = secagg::SecurityMode::kMalicious;
  RunOptions opts;
  opts.faults.tamper = simnet::TamperSpec{
      .round = 3, .from = 4, .to = simnet::kServerId, .byte_index = 40};
  auto outcome = RunSimulation(p, w, Inputs(dom, 6, 12, 12), opts);
  ASSERT_FALSE(outcome.status.ok());
  EXPECT_TRUE(HasErrorKind(outcome.status, ErrorKind::kProtocolAborted));
  EXPECT_EQ(GetCauseKind(outcome.status), ErrorKind::kAbortBadSignature);
  auto edge = GetOffendingEdge(outcome.status);
  ASSERT_TRUE(edge.has_value());
  EXPECT_EQ(edge->sender, 4u);
  EXPECT_FALSE(outcome.result.has_value());
  EXPECT_GT(outcome.metrics.server.bytes_received, 0);
}

TEST(RunProtocolTest, ConfigErrors) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 1).value();
  auto inputs = Inputs(dom, 4, 8, 13);
  ProtocolParams p = Params(5);
  EXPECT_TRUE(HasErrorKind(RunProtocol(p, w, inputs).status(),
                           ErrorKind::kInvalidConfig));
  p = Params(4);
  p.theta = 1.0;
  EXPECT_TRUE(HasErrorKind(RunProtocol(p, w, inputs).status(),
                           ErrorKind::kInvalidConfig));
  p = Params(4);
  p.p = 1000;
  EXPECT_TRUE(HasErrorKind(RunProtocol(p, w, inputs).status(),
                           ErrorKind::kInvalidConfig));
  p = Params(4);
  auto bad = inputs;
  bad[1].records.push_back(Record{9, 0});
  EXPECT_TRUE(HasErrorKind(RunProtocol(p, w, bad).status(),
                           ErrorKind::kInvalidRecord));
}

TEST(RunProtocolTest, SmallFieldFailsCapacityCheck) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 1).value();
  ProtocolParams p = Params(4);
  p.p = 1009;
  auto r = RunProtocol(p, w, Inputs(dom, 4, 8, 14));
  EXPECT_TRUE(HasErrorKind(r.status(), ErrorKind::kRangeOverflow));
}

TEST(RunProtocolTest, MatchesCentralUtilityAtThetaZero) {
  DomainSpec dom = Small();
  auto w = workloads::BuildMarginals(dom, 2).value();
  const int64_t n = 30;
  auto inputs = Inputs(dom, n, 60, 15);
  std::vector<Record> all;
  for (const auto& c : inputs) all.insert(all.end(), c.records.begin(), c.records.end());
  ProtocolParams p = Params(n);
  p.rho = 0.2;
  auto r1 = ServerRound1(p, w).value();
  RunOptions opts;
  opts.strategy = r1;
  Vector exact = PooledExact(r1.plan, inputs);
  std::vector<double> dist, central;
  for (uint64_t t = 0; t < 150; ++t) {
    p.seed = t;
    auto r = RunProtocol(p, w, inputs, opts);
    ASSERT_TRUE(r.ok());
    dist.push_back(*baselines::Rmse(r->answer, exact));
    central.push_back(baselines::CentralHdmm(r1.plan, all, p.rho, 7000 + t)->rmse);
  }
  EXPECT_GT(testing::KolmogorovSmirnov(dist, central).p_value, 1e-3);
}

}  // namespace
}  // namespace dhdmm::protocol
