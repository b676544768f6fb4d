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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Pass criterion numbers as arguments to run a
// subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dhdmm/baselines/baselines.h"
#include "dhdmm/dpnoise/accountant.h"
#include "dhdmm/dpnoise/samplers.h"
#include "dhdmm/protocol/protocol.h"
#include "dhdmm/random.h"
#include "dhdmm/secagg/aggregation.h"
#include "dhdmm/secagg/graph.h"
#include "dhdmm/secagg/shamir.h"
#include "dhdmm/status.h"
#include "dhdmm/workloads/workloads.h"
#include "testing/stats.h"
#include "testing/survivor_oracle.h"

namespace dhdmm {
namespace {

using fieldcodec::EncodedVector;
using matmech::DomainSpec;
using matmech::Record;
using matmech::Vector;
using protocol::ClientInput;
using protocol::PreparedStrategy;
using protocol::ProtocolParams;
using protocol::RunOptions;
using secagg::AggConfig;
using secagg::DropoutEvent;
using secagg::DropPhase;
using secagg::SecurityMode;
using secagg::SuiteKind;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

ProtocolParams FastParams(int64_t n) {
  ProtocolParams p;
  p.n = n;
  p.agg.suite = SuiteKind::kInsecureFast;
  return p;
}

std::vector<ClientInput> SplitInputs(const std::vector<Record>& records,
                                     int64_t n, uint64_t seed) {
  auto parts = workloads::Partition(records, n, seed);
  std::vector<ClientInput> out(n);
  for (int64_t i = 0; i < n; ++i) out[i].records = std::move(parts[i]);
  return out;
}

Vector ExactAnswer(const matmech::MeasurementPlan& plan,
                   const std::vector<Record>& records) {
  return plan
      .Exact(matmech::Vectorize(records, plan.workload().domain()).value())
      .value();
}

Outcome KappaReproduction() {
  Stopwatch clock;
  dpnoise::PrivacyParams p;
  p.rho = 0.1;
  p.n = 5000;
  p.theta = 0.0;
  p.gamma = 100;
  p.delta2 = 1.0;
  dpnoise::KappaValue k = dpnoise::Kappa(p);
  double secs = clock.Seconds();
  double rel = std::abs(k.value / 9.39e-86 - 1.0);
  return {rel <= 0.01 && secs < 1.0,
          absl::StrFormat("kappa=%.4e rel_err=%.2e time=%.3fs", k.value, rel,
                          secs)};
}

Outcome ExactnessOracle() {
  Rng rng(0xacce5502);
  int passed = 0;
  double worst = 0.0;
  std::string first_failure;
  for (int inst = 0; inst < 100; ++inst) {
    // Random domain with at most 64 cells.
    std::vector<matmech::Attribute> attrs;
    int64_t d = 1;
    int num_attrs = 1 + rng.UniformBelow(3);
    for (int a = 0; a < num_attrs; ++a) {
      int64_t card = 2 + rng.UniformBelow(3);
      if (d * card > 64) break;
      d *= card;
      attrs.push_back({absl::StrCat("a", a), card});
    }
    DomainSpec dom = DomainSpec::Create(attrs).value();
    int k = rng.UniformBelow(dom.num_attributes() + 1);
    auto w = workloads::BuildMarginals(dom, k).value();
    int64_t n = 1 + rng.UniformBelow(200);
    ProtocolParams p = FastParams(n);
    p.gamma = 1000;
    p.noise_disabled = true;
    p.seed = inst;
    p.agg.max_dropout_fraction = 0.5;
    auto records = workloads::SyntheticRecords(
        dom, n * (1 + rng.UniformBelow(4)), 1000 + inst);
    auto inputs = SplitInputs(records, n, 2000 + inst);
    auto r = protocol::RunProtocol(p, w, inputs);
    bool ok = r.ok();
    if (ok) {
      auto plan = matmech::MeasurementPlan::Create(
                      w, matmech::Strategy::Create(r->strategy, dom).value())
                      .value();
      Vector exact = ExactAnswer(plan, records);
      Vector bound =
          protocol::TruncationBound(plan.reconstruction(), n, p.gamma);
      for (Eigen::Index q = 0; q < exact.size(); ++q) {
        double err = std::abs(r->answer(q) - exact(q));
        if (bound(q) > 0) worst = std::max(worst, err / bound(q));
        if (err > bound(q) + 1e-9) ok = false;
      }
    }
    if (ok) {
      ++passed;
    } else if (first_failure.empty()) {
      first_failure = absl::StrCat(" first_failure=instance ", inst,
                                   r.ok() ? "" : " " + r.status().ToString());
    }
  }
  return {passed == 100,
          absl::StrFormat("%d/100 within bound, worst err/bound=%.3f%s",
                          passed, worst, first_failure)};
}

Outcome UtilityParity() {
  Stopwatch clock;
  const int64_t n = 1000;
  const int trials = 200;
  DomainSpec dom = workloads::AdultDomain();
  auto w = workloads::BuildMarginals(dom, 2).value();
  auto records = workloads::SyntheticRecords(dom, 5 * n, 31);
  auto inputs = SplitInputs(records, n, 32);
  ProtocolParams p = FastParams(n);
  RunOptions opts;
  opts.strategy = protocol::ServerRound1(p, w).value();
  const auto& plan = opts.strategy->plan;
  Vector exact = ExactAnswer(plan, records);
  std::vector<double> dist, central;
  for (int t = 0; t < trials; ++t) {
    p.seed = 30000 + t;
    auto r = protocol::RunProtocol(p, w, inputs, opts);
    if (!r.ok()) return {false, r.status().ToString()};
    dist.push_back(*baselines::Rmse(r->answer, exact));
    central.push_back(
        baselines::CentralHdmm(plan, records, p.rho, 40000 + t)->rmse);
  }
  double secs = clock.Seconds();
  auto ks = testing::KolmogorovSmirnov(dist, central);
  auto welch = testing::WelchT(dist, central);
  return {ks.p_value > 0.01 && secs < 300.0,
          absl::StrFormat("d=%d trials=%d mean_rmse dist=%.4f central=%.4f "
                          "KS p=%.3f Welch p=%.3f time=%.1fs",
                          dom.size(), trials, testing::Mean(dist),
                          testing::Mean(central), ks.p_value, welch.p_value,
                          secs)};
}

// Shared by the theta-scaling and local-gap criteria.
struct SmallBenchmark {
  DomainSpec dom = workloads::AdultDomain();
  matmech::Workload w = workloads::BuildMarginals(dom, 2).value();
  std::vector<Record> records;
  std::vector<ClientInput> inputs;
  RunOptions opts;
  Vector exact;

  explicit SmallBenchmark(int64_t n) {
    records = workloads::SyntheticRecords(dom, 5 * n, 51);
    inputs = SplitInputs(records, n, 52);
    opts.strategy = protocol::ServerRound1(FastParams(n), w).value();
    exact = ExactAnswer(opts.strategy->plan, records);
  }

  absl::StatusOr<double> DistributedRmse(double theta, uint64_t seed) const {
    ProtocolParams p = FastParams(static_cast<int64_t>(inputs.size()));
    p.theta = theta;
    p.seed = seed;
    auto r = protocol::RunProtocol(p, w, inputs, opts);
    if (!r.ok()) return r.status();
    return baselines::Rmse(r->answer, exact);
  }
};

Outcome ThetaScaling() {
  SmallBenchmark bench(100);
  const int trials = 500;
  std::vector<double> at0, at3;
  for (int t = 0; t < trials; ++t) {
    auto a = bench.DistributedRmse(0.0, 50000 + t);
    auto b = bench.DistributedRmse(0.3, 60000 + t);
    if (!a.ok() || !b.ok()) {
      return {false, (a.ok() ? b.status() : a.status()).ToString()};
    }
    at0.push_back(*a);
    at3.push_back(*b);
  }
  const double want = std::sqrt(1.0 / 0.7);
  double ratio = testing::Mean(at3) / testing::Mean(at0);
  return {std::abs(ratio / want - 1.0) <= 0.10,
          absl::StrFormat("n=100 trials=%d ratio=%.4f expected=%.4f", trials,
                          ratio, want)};
}

Outcome LocalGap() {
  const int64_t n = 100;
  SmallBenchmark bench(n);
  std::vector<std::vector<Record>> clients;
  for (const auto& c : bench.inputs) clients.push_back(c.records);
  std::vector<double> dist, local;
  for (int t = 0; t < 50; ++t) {
    auto a = bench.DistributedRmse(0.0, 70000 + t);
    if (!a.ok()) return {false, a.status().ToString()};
    dist.push_back(*a);
    auto l = baselines::LocalGaussian(bench.opts.strategy->plan, clients, 0.1,
                                      80000 + t);
    if (!l.ok()) return {false, l.status().ToString()};
    local.push_back(l->rmse);
  }
  double ratio = testing::Mean(local) / testing::Mean(dist);
  return {ratio >= 5.0,
          absl::StrFormat("n=%d mean_rmse local=%.3f distributed=%.3f "
                          "ratio=%.2f",
                          n, testing::Mean(local), testing::Mean(dist), ratio)};
}

std::vector<EncodedVector> RandomVectors(int64_t n, size_t len, uint64_t p,
                                         uint64_t seed) {
  Rng rng(seed);
  std::vector<EncodedVector> out(n);
  for (auto& v : out) {
    for (size_t j = 0; j < len; ++j) v.elements.push_back(rng.UniformBelow(p));
  }
  return out;
}

// Runs one aggregation and compares it with the oracle. Returns an empty
// string on agreement.
std::string CompareWithOracle(const std::vector<EncodedVector>& inputs,
                              const AggConfig& cfg,
                              const std::vector<DropoutEvent>& drops,
                              uint64_t seed) {
  auto params = secagg::ResolveAggParams(cfg);
  if (!params.ok()) return params.status().ToString();
  auto graph = secagg::BuildGraph(cfg.n, params->degree, seed);
  if (!graph.ok()) return graph.status().ToString();
  auto want = testing::PredictAggregation(
      inputs, graph->neighbors, params->threshold,
      cfg.mode == SecurityMode::kMalicious, drops, cfg.p);
  simnet::SimNet net(cfg.n, simnet::NetConfig{});
  auto got = secagg::RunAggregation(inputs, cfg, net, drops, seed);
  if (want.success) {
    if (!got.ok()) return "unexpected abort: " + got.status().ToString();
    if (got->sum != want.sum) return "sum differs from oracle";
    std::vector<uint32_t> survivors(got->survivors.begin(),
                                    got->survivors.end());
    if (survivors != want.survivors) return "survivor set differs";
    return "";
  }
  if (got.ok()) return "oracle predicts abort, protocol succeeded";
  if (!HasErrorKind(got.status(), ErrorKind::kAbortInsufficientShares)) {
    return "wrong abort kind: " + got.status().ToString();
  }
  return "";
}

AggConfig OracleConfig(int64_t n, SecurityMode mode) {
  AggConfig cfg;
  cfg.n = n;
  cfg.mode = mode;
  cfg.suite = SuiteKind::kInsecureFast;
  cfg.max_dropout_fraction = 0.99;
  return cfg;
}

Outcome SecureAggregation() {
  Stopwatch clock;
  int64_t exhaustive = 0, randomized = 0;
  std::string failure;
  auto check = [&](const std::vector<EncodedVector>& inputs,
                   const AggConfig& cfg, const std::vector<DropoutEvent>& d,
                   uint64_t seed) {
    std::string msg = CompareWithOracle(inputs, cfg, d, seed);
    if (!msg.empty() && failure.empty()) {
      failure = absl::StrCat("n=", cfg.n, " seed=", seed, " drops=", d.size(),
                             ": ", msg);
    }
    return msg.empty();
  };
  const SecurityMode modes[] = {SecurityMode::kSemiHonest,
                                SecurityMode::kMalicious};
  // Every proper subset of clients, dropping together at each (round, phase);
  // for n <= 4 additionally every per-client choice of (round, phase) or none.
  for (int64_t n = 2; n <= 8; ++n) {
    auto inputs = RandomVectors(n, 3, fieldcodec::kMersenne61, 100 + n);
    for (SecurityMode mode : modes) {
      AggConfig cfg = OracleConfig(n, mode);
      for (uint32_t mask = 0; mask + 1 < (1u << n); ++mask) {
        for (int ev = 0; ev < 10; ++ev) {
          std::vector<DropoutEvent> drops;
          for (uint32_t i = 0; i < n; ++i) {
            if (mask >> i & 1) {
              drops.push_back({i, static_cast<uint8_t>(1 + ev / 2),
                               ev % 2 ? DropPhase::kAfter : DropPhase::kBefore});
            }
          }
          check(inputs, cfg, drops, 900 + n + mask);
          ++exhaustive;
          if (mask == 0) break;
        }
      }
      if (n > 4) continue;
      int64_t patterns = 1;
      for (int i = 0; i < n; ++i) patterns *= 11;
      for (int64_t code = 0; code < patterns; ++code) {
        std::vector<DropoutEvent> drops;
        int64_t c = code;
        for (uint32_t i = 0; i < n; ++i, c /= 11) {
          int64_t choice = c % 11;
          if (choice == 10) continue;
          drops.push_back({i, static_cast<uint8_t>(1 + choice / 2),
                           choice % 2 ? DropPhase::kAfter : DropPhase::kBefore});
        }
        if (static_cast<int64_t>(drops.size()) == n) continue;
        check(inputs, cfg, drops, 1300 + code);
        ++exhaustive;
      }
    }
  }
  // Randomized n = 100 with up to 10% dropouts.
  const int64_t n = 100;
  const int64_t cases = 100000;
  Rng rng(0xacce5506);
  std::vector<uint32_t> order(n);
  for (int64_t c = 0; c < cases; ++c) {
    auto inputs = RandomVectors(n, 4, fieldcodec::kMersenne61, c);
    AggConfig cfg = OracleConfig(n, modes[c % 2]);
    cfg.max_dropout_fraction = 0.1;
    for (uint32_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    int64_t count = rng.UniformBelow(n / 10 + 1);
    std::vector<DropoutEvent> drops;
    for (int64_t j = 0; j < count; ++j) {
      drops.push_back({order[j], static_cast<uint8_t>(1 + rng.UniformBelow(5)),
                       rng.FairCoin() ? DropPhase::kAfter : DropPhase::kBefore});
    }
    check(inputs, cfg, drops, 0x10000 + c);
    ++randomized;
  }
  return {failure.empty(),
          absl::StrFormat("exhaustive=%d randomized=%d time=%.0fs%s",
                          exhaustive, randomized, clock.Seconds(),
                          failure.empty() ? "" : " " + failure)};
}

Outcome ShamirThreshold() {
  Rng rng(0xacce5507);
  const uint64_t secret = 0x123456789abcdefULL % secagg::kShareField;
  auto shares = secagg::ShareSecret(secret, 3, 5, rng).value();
  int recovered = 0, failed = 0, total3 = 0, total2 = 0;
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) {
      std::vector<secagg::Share> two = {shares[a], shares[b]};
      ++total2;
      if (!secagg::RecoverSecret(two, 3).ok()) ++failed;
      for (int c = b + 1; c < 5; ++c) {
        std::vector<secagg::Share> three = {shares[a], shares[b], shares[c]};
        ++total3;
        auto got = secagg::RecoverSecret(three, 3);
        if (got.ok() && *got == secret) ++recovered;
      }
    }
  }
  return {recovered == total3 && failed == total2,
          absl::StrFormat("3-subsets recovered %d/%d, 2-subsets failed %d/%d",
                          recovered, total3, failed, total2)};
}

Outcome DiscreteGaussianFidelity() {
  bool pass = true;
  std::string detail;
  Rng rng(0xacce5508);
  for (double sigma2 : {1.0, 10.0, 100.0}) {
    auto sampler = dpnoise::DiscreteGaussianSampler::Create(sigma2).value();
    std::vector<int64_t> samples(1000000);
    for (auto& s : samples) s = sampler.Sample(rng);
    auto gof =
        testing::ChiSquareGoodnessOfFit(samples, testing::DiscreteGaussianPmf(sigma2));
    // Sums of 10 independent samples.
    const int terms = 10;
    std::vector<double> sums(100000);
    for (auto& s : sums) {
      int64_t acc = 0;
      for (int j = 0; j < terms; ++j) acc += sampler.Sample(rng);
      s = static_cast<double>(acc);
    }
    double var_ratio = testing::Variance(sums) / (terms * sigma2);
    bool ok = gof.p_value > 0.001 && std::abs(var_ratio - 1.0) <= 0.05;
    pass = pass && ok;
    absl::StrAppend(&detail,
                    absl::StrFormat("s2=%g chi2 p=%.3f sum_var/(n*s2)=%.4f; ",
                                    sigma2, gof.p_value, var_ratio));
  }
  return {pass, detail};
}

Outcome ScalingShape() {
  auto w = workloads::BuildSf1Shaped(1).value();
  ProtocolParams base;
  base.agg.suite = SuiteKind::kStandard;
  PreparedStrategy prepared = protocol::ServerRound1(base, w).value();
  struct Point {
    double client_bytes, server_bytes, runtime, aggregation;
  };
  auto measure = [&](int64_t n) -> absl::StatusOr<Point> {
    ProtocolParams p = base;
    p.n = n;
    p.seed = 9;
    auto records = workloads::SyntheticRecords(w.domain(), 2 * n, 90 + n);
    RunOptions opts;
    opts.strategy = prepared;
    auto r = protocol::RunProtocol(p, w, SplitInputs(records, n, 91), opts);
    if (!r.ok()) return r.status();
    double client = 0;
    for (const auto& c : r->metrics.clients) {
      client += c.bytes_sent + c.bytes_received;
    }
    std::map<std::string, double> marks(r->metrics.round_timestamps.begin(),
                                        r->metrics.round_timestamps.end());
    const auto& s = r->metrics.server;
    return Point{client / n,
                 static_cast<double>(s.bytes_sent + s.bytes_received),
                 r->metrics.total_time_s,
                 marks["reconstruction"] - marks["local_measurement"]};
  };
  auto small = measure(100);
  if (!small.ok()) return {false, small.status().ToString()};
  auto large = measure(3000);
  if (!large.ok()) return {false, large.status().ToString()};
  double client_growth = large->client_bytes / small->client_bytes;
  double server_growth = large->server_bytes / small->server_bytes;
  double time_growth = large->runtime / small->runtime;
  return {client_growth < 2.0 && server_growth >= 20.0 && time_growth <= 10.0,
          absl::StrFormat("client_bytes x%.2f server_bytes x%.1f "
                          "runtime %.2fs->%.2fs (x%.2f) "
                          "aggregation %.3fs->%.3fs",
                          client_growth, server_growth, small->runtime,
                          large->runtime, time_growth, small->aggregation,
                          large->aggregation)};
}

Outcome TamperDetection() {
  Rng rng(0xacce5510);
  const int injections = 1000;
  int detected = 0;
  std::string failure;
  for (int i = 0; i < injections; ++i) {
    int64_t n = 3 + rng.UniformBelow(8);
    auto inputs = RandomVectors(n, 3, fieldcodec::kMersenne61, 5000 + i);
    AggConfig cfg = OracleConfig(n, SecurityMode::kMalicious);
    cfg.suite = SuiteKind::kStandard;
    secagg::AggHooks hooks;
    hooks.record_transcript = true;
    simnet::SimNet clean_net(n, simnet::NetConfig{});
    auto clean = secagg::RunAggregation(inputs, cfg, clean_net, {}, i, hooks);
    if (!clean.ok()) return {false, clean.status().ToString()};
    const auto& msgs = clean->transcript.messages;
    const auto& m = msgs[rng.UniformBelow(msgs.size())];
    simnet::SimNet net(n, simnet::NetConfig{});
    net.SetTamper({m.round, m.from, m.to, rng.UniformBelow(m.bytes.size()),
                   static_cast<uint8_t>(1 + rng.UniformBelow(255))});
    auto got = secagg::RunAggregation(inputs, cfg, net, {}, i);
    auto edge = GetOffendingEdge(got.status());
    if (net.tamper_applied() && !got.ok() && edge.has_value() &&
        edge->sender == m.from && edge->receiver == m.to) {
      ++detected;
    } else if (failure.empty()) {
      failure = absl::StrCat(" first_miss: injection ", i, " round ",
                             static_cast<int>(m.round), " ", m.from, "->",
                             m.to);
    }
  }
  return {detected == injections,
          absl::StrFormat("detected with correct edge %d/%d%s", detected,
                          injections, failure)};
}

Outcome ConversionFormula() {
  double eps = dpnoise::ZcdpToEpsilon(0.1, 1e-5);
  return {std::abs(eps - 2.2460) <= 1e-3, absl::StrFormat("epsilon=%.6f", eps)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace dhdmm

int main(int argc, char** argv) {
  using dhdmm::Criterion;
  const std::vector<Criterion> criteria = {
      {1, "kappa reproduction", dhdmm::KappaReproduction},
      {2, "exactness oracle", dhdmm::ExactnessOracle},
      {3, "theta=0 utility parity", dhdmm::UtilityParity},
      {4, "theta scaling", dhdmm::ThetaScaling},
      {5, "local-model gap", dhdmm::LocalGap},
      {6, "secure aggregation correctness", dhdmm::SecureAggregation},
      {7, "secret-sharing threshold", dhdmm::ShamirThreshold},
      {8, "discrete Gaussian fidelity", dhdmm::DiscreteGaussianFidelity},
      {9, "scaling shape", dhdmm::ScalingShape},
      {10, "malicious tamper detection", dhdmm::TamperDetection},
      {11, "conversion formula", dhdmm::ConversionFormula},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    dhdmm::Outcome o = c.run();
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
