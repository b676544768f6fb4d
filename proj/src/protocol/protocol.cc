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

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dhdmm/bytes.h"
#include "dhdmm/status.h"

namespace dhdmm::protocol {
namespace {

using fieldcodec::EncodedVector;
using matmech::Matrix;
using matmech::Vector;
using simnet::kServerId;

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

absl::Status ConfigError(const std::string& what) {
  return MakeError(ErrorKind::kInvalidConfig, what);
}

// Errors the caller configured (bad parameters) stay as they are; anything
// else is a protocol abort attributed to `round`.
absl::Status Attribute(const absl::Status& status, const std::string& round) {
  if (HasErrorKind(status, ErrorKind::kInvalidConfig)) return status;
  return WrapProtocolAbort(status, round);
}

}  // namespace

absl::Status ProtocolParams::Validate() const {
  DHDMM_RETURN_IF_ERROR(Privacy(1.0).Validate());
  DHDMM_RETURN_IF_ERROR(Field().Validate());
  if (!(delta > 0.0 && delta < 1.0)) {
    return ConfigError("delta must lie in (0, 1)");
  }
  return ResolvedAggConfig().Validate();
}

secagg::AggConfig ProtocolParams::ResolvedAggConfig() const {
  secagg::AggConfig cfg = agg;
  cfg.n = n;
  cfg.mode = mode;
  cfg.p = p;
  return cfg;
}

fieldcodec::FieldParams ProtocolParams::Field() const {
  return fieldcodec::FieldParams{.p = p, .gamma = gamma};
}

dpnoise::PrivacyParams ProtocolParams::Privacy(double delta2) const {
  return dpnoise::PrivacyParams{
      .rho = rho, .theta = theta, .n = n, .gamma = gamma, .delta2 = delta2};
}

absl::StatusOr<PreparedStrategy> ServerRound1(
    const ProtocolParams& params, const matmech::Workload& workload) {
  DHDMM_ASSIGN_OR_RETURN(
      matmech::OptimizationReport report,
      matmech::OptimizeStrategyWithReport(workload, params.optimizer));
  DHDMM_ASSIGN_OR_RETURN(
      matmech::MeasurementPlan plan,
      matmech::MeasurementPlan::Create(workload, std::move(report.strategy)));
  return PreparedStrategy{std::move(plan), report.flops, report.chosen};
}

std::string SerializeStrategy(const Matrix& a) {
  static_assert(std::endian::native == std::endian::little);
  ByteWriter w;
  w.Reserve(16 + 8 * a.size());
  w.U64(static_cast<uint64_t>(a.rows()));
  w.U64(static_cast<uint64_t>(a.cols()));
  std::string out = w.Take();
  const size_t header = out.size();
  out.resize(header + 8 * a.size());
  char* at = out.data() + header;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j, at += 8) {
      double v = a(i, j);
      std::memcpy(at, &v, 8);
    }
  }
  return out;
}

absl::StatusOr<Matrix> DeserializeStrategy(std::string_view bytes,
                                           int64_t expected_cols) {
  ByteReader r(bytes);
  const uint64_t rows = r.U64();
  const uint64_t cols = r.U64();
  if (!r.ok() || cols != static_cast<uint64_t>(expected_cols) || rows == 0 ||
      cols == 0 || r.remaining() % 8 != 0 ||
      r.remaining() / 8 / cols != rows || r.remaining() / 8 % cols != 0) {
    return MakeError(ErrorKind::kDimensionError,
                     "malformed strategy broadcast");
  }
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor staged(rows, cols);
  std::memcpy(staged.data(), bytes.data() + 16, 8 * rows * cols);
  if (!staged.allFinite()) {
    return MakeError(ErrorKind::kDimensionError,
                     "strategy broadcast holds non-finite entries");
  }
  return Matrix(staged);
}

absl::StatusOr<ClientRound2Output> ClientRound2(
    const ProtocolParams& params, const matmech::DomainSpec& domain,
    std::string_view strategy_bytes, const ClientInput& input, Rng& rng) {
  DHDMM_ASSIGN_OR_RETURN(Matrix a,
                         DeserializeStrategy(strategy_bytes, domain.size()));
  ClientRound2Output out;
  out.delta2 = matmech::Sensitivity(a);
  out.records = static_cast<int64_t>(input.records.size());
  DHDMM_ASSIGN_OR_RETURN(matmech::HistogramVector x,
                         matmech::Vectorize(input.records, domain));
  DHDMM_ASSIGN_OR_RETURN(Vector m, matmech::Measure(a, x));
  out.sigma2 = params.noise_disabled
                   ? 0.0
                   : dpnoise::PerClientVariance(params.Privacy(out.delta2));
  DHDMM_ASSIGN_OR_RETURN(
      out.encoded,
      fieldcodec::EncodeWithVariance(std::span<const double>(m.data(), m.size()),
                                     params.Field(), out.sigma2, rng));
  return out;
}

absl::StatusOr<ServerOutput> ServerRound3(
    const ProtocolParams& params, const matmech::MeasurementPlan& plan,
    const EncodedVector& aggregate, int64_t survivors, double delta2) {
  std::vector<double> decoded = fieldcodec::Decode(aggregate, params.Field());
  Vector m = Eigen::Map<const Vector>(decoded.data(), decoded.size());
  ServerOutput out;
  DHDMM_ASSIGN_OR_RETURN(out.answer, plan.Answer(m));
  out.privacy = dpnoise::AccountRealized(params.Privacy(delta2), params.delta,
                                         survivors);
  return out;
}

Vector TruncationBound(const Matrix& reconstruction, int64_t n, double gamma) {
  return reconstruction.cwiseAbs().rowwise().sum() *
         (static_cast<double>(n) / gamma);
}

nlohmann::json ProtocolResult::ToJson() const {
  nlohmann::json j;
  j["answer"] = std::vector<double>(answer.data(), answer.data() + answer.size());
  j["privacy"] = dpnoise::ToJson(privacy);
  j["metrics"] = metrics.SummaryJson();
  j["strategy"] = {{"rows", strategy.rows()},
                   {"cols", strategy.cols()},
                   {"sensitivity", matmech::Sensitivity(strategy)},
                   {"chosen", strategy_chosen}};
  j["survivors"] = survivors.size();
  j["dropped"] = dropped;
  j["faults"] = fault_log;
  return j;
}

SimulationOutcome RunSimulation(const ProtocolParams& params,
                                const matmech::Workload& workload,
                                const std::vector<ClientInput>& inputs,
                                const RunOptions& options) {
  SimulationOutcome outcome;
  auto fail = [&](absl::Status status) {
    outcome.status = std::move(status);
    return std::move(outcome);
  };
  if (absl::Status s = params.Validate(); !s.ok()) return fail(s);
  if (absl::Status s = options.net.Validate(); !s.ok()) return fail(s);
  if (static_cast<int64_t>(inputs.size()) != params.n) {
    return fail(ConfigError(absl::StrCat("expected ", params.n,
                                         " client inputs, got ",
                                         inputs.size())));
  }
  if (!(options.faults.strategy_scale > 0.0) ||
      !std::isfinite(options.faults.strategy_scale)) {
    return fail(ConfigError("strategy_scale must be positive"));
  }
  const matmech::DomainSpec& domain = workload.domain();
  int64_t max_records = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (const auto& r : inputs[i].records) {
      if (!domain.IsValid(r)) {
        return fail(MakeError(ErrorKind::kInvalidRecord,
                              absl::StrCat("client ", i,
                                           " holds a record outside the "
                                           "domain")));
      }
    }
    max_records =
        std::max<int64_t>(max_records, static_cast<int64_t>(inputs[i].records.size()));
  }

  simnet::SimNet net(params.n, options.net);
  if (options.faults.tamper) net.SetTamper(*options.faults.tamper);
  const simnet::CostModel& cost = net.cost();
  Rng root(params.seed);
  auto metrics_so_far = [&] {
    outcome.metrics = net.Metrics();
  };

  // Round 1: optimize and broadcast the strategy.
  WallTimer server_timer;
  std::optional<PreparedStrategy> prepared = options.strategy;
  if (!prepared) {
    auto r1 = ServerRound1(params, workload);
    if (!r1.ok()) {
      net.Compute(kServerId, 0.0, server_timer.Seconds());
      metrics_so_far();
      return fail(Attribute(r1.status(), "round 1 (strategy optimization)"));
    }
    prepared = std::move(r1).value();
  }
  const double scale = options.faults.strategy_scale;
  Matrix broadcast = prepared->plan.strategy().matrix();
  std::optional<matmech::MeasurementPlan> scaled_plan;
  if (scale != 1.0) {
    broadcast *= scale;
    auto strategy = matmech::Strategy::Create(broadcast, domain);
    if (strategy.ok()) {
      auto plan = matmech::MeasurementPlan::Create(workload, *std::move(strategy));
      if (plan.ok()) scaled_plan.emplace(*std::move(plan));
    }
    if (!scaled_plan) {
      metrics_so_far();
      return fail(ConfigError("scaled strategy is not usable"));
    }
  }
  const matmech::MeasurementPlan& plan = scaled_plan ? *scaled_plan : prepared->plan;
  const std::string wire = SerializeStrategy(broadcast);
  net.Compute(kServerId,
              prepared->optimizer_flops * cost.flop +
                  static_cast<double>(wire.size()) * cost.byte,
              server_timer.Seconds());
  for (PartyId i = 0; i < static_cast<PartyId>(params.n); ++i) {
    net.Send(kServerId, i, kStrategyRound, wire);
  }

  // Round 2, local part: every client measures and encodes.
  const fieldcodec::FieldParams fp = params.Field();
  const int64_t k = broadcast.rows();
  if (absl::Status s = fieldcodec::CheckFieldCapacity(
          fp, params.n,
          static_cast<double>(max_records) * broadcast.cwiseAbs().maxCoeff(),
          params.noise_disabled
              ? 0.0
              : dpnoise::PerClientVariance(
                    params.Privacy(matmech::Sensitivity(broadcast))),
          k);
      !s.ok()) {
    metrics_so_far();
    return fail(s);
  }
  std::vector<EncodedVector> encoded(params.n);
  std::vector<ClientReport> reports(params.n);
  std::vector<secagg::DropoutEvent> dropouts = options.net.dropout_schedule;
  std::vector<std::string> fault_log;
  std::vector<bool> garbage(params.n, false);
  for (PartyId g : options.faults.garbage_clients) {
    if (g < garbage.size()) garbage[g] = true;
  }
  double delta2 = 0.0;
  for (PartyId i = 0; i < static_cast<PartyId>(params.n); ++i) {
    std::vector<simnet::Message> msgs = net.Receive(i);
    if (msgs.empty()) continue;  // dropped before the broadcast arrived
    WallTimer timer;
    Rng rng = root.Derive("protocol.client", i);
    auto r2 = ClientRound2(params, domain, msgs.front().bytes, inputs[i], rng);
    double simulated =
        static_cast<double>(wire.size()) * cost.byte +
        static_cast<double>(broadcast.size()) * cost.flop +
        static_cast<double>(inputs[i].records.size() * k) * cost.flop +
        static_cast<double>(k) * cost.field_op +
        (params.noise_disabled ? 0.0 : static_cast<double>(k) * cost.noise_sample);
    if (!r2.ok()) {
      if (!HasErrorKind(r2.status(), ErrorKind::kRangeOverflow)) {
        net.Compute(i, simulated, timer.Seconds());
        metrics_so_far();
        return fail(Attribute(r2.status(),
                              absl::StrCat("round 2 (client ", i, ")")));
      }
      fault_log.push_back(absl::StrCat("client ", i, " withdrew: ",
                                       std::string(r2.status().message())));
      dropouts.push_back({.client = i, .round = 1,
                          .phase = simnet::DropPhase::kBefore});
      reports[i].submitted = false;
      encoded[i].elements.assign(k, 0);
      net.Compute(i, simulated, timer.Seconds());
      continue;
    }
    reports[i].delta2 = r2->delta2;
    reports[i].sigma2 = r2->sigma2;
    delta2 = r2->delta2;
    encoded[i] = std::move(r2->encoded);
    if (garbage[i]) {
      Rng junk = root.Derive("protocol.garbage", i);
      for (uint64_t& e : encoded[i].elements) e = junk.UniformBelow(params.p);
    }
    net.Compute(i, simulated, timer.Seconds());
  }
  net.MarkRound("local_measurement");

  // Round 2, secure aggregation.
  const uint64_t agg_seed = root.Derive("protocol.secagg")();
  auto agg = secagg::RunAggregation(encoded, params.ResolvedAggConfig(), net,
                                    dropouts, agg_seed,
                                    options.faults.agg_hooks);
  if (!agg.ok()) {
    metrics_so_far();
    return fail(Attribute(agg.status(), "round 2 (secure aggregation)"));
  }

  // Round 3: decode and reconstruct.
  WallTimer r3_timer;
  const int64_t survivors = static_cast<int64_t>(agg->survivors.size());
  auto r3 = ServerRound3(params, plan, agg->sum, survivors,
                         delta2 > 0.0 ? delta2 : matmech::Sensitivity(broadcast));
  net.Compute(kServerId,
              static_cast<double>(k) * cost.field_op +
                  static_cast<double>(plan.reconstruction().size()) * cost.flop,
              r3_timer.Seconds());
  net.MarkRound("reconstruction");
  metrics_so_far();
  if (!r3.ok()) return fail(Attribute(r3.status(), "round 3 (reconstruction)"));

  ProtocolResult result;
  result.answer = std::move(r3->answer);
  result.privacy = r3->privacy;
  result.metrics = outcome.metrics;
  result.aggregate = std::move(agg->sum);
  result.strategy = std::move(broadcast);
  result.strategy_chosen = prepared->chosen;
  result.survivors = std::move(agg->survivors);
  result.dropped = std::move(agg->dropped);
  result.clients = std::move(reports);
  result.fault_log = std::move(fault_log);
  outcome.result = std::move(result);
  return outcome;
}

absl::StatusOr<ProtocolResult> RunProtocol(const ProtocolParams& params,
                                           const matmech::Workload& workload,
                                           const std::vector<ClientInput>& inputs,
                                           const RunOptions& options) {
  SimulationOutcome outcome = RunSimulation(params, workload, inputs, options);
  if (!outcome.status.ok()) return outcome.status;
  return *std::move(outcome.result);
}

}  // namespace dhdmm::protocol
