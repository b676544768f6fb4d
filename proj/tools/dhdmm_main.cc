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

// Experiment runner: simulated protocol runs, parameter sweeps and privacy
// accounting.
//
//   dhdmm run --clients 100 --workload sf1:1 --rho 0.1 --trials 5 --out out/
//   dhdmm sweep --axis theta --values 0,0.1,0.3 --trials 50 --baselines
//   dhdmm account --rho 0.1 --clients 5000 --gamma 100
//
// Options may also come from a TOML file, `--config exp.toml`, with one
// section per subcommand; flags on the command line take precedence.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/match.h"
#include "absl/strings/str_split.h"
#include "dhdmm/baselines/baselines.h"
#include "dhdmm/dpnoise/accountant.h"
#include "dhdmm/protocol/protocol.h"
#include "dhdmm/random.h"
#include "dhdmm/status.h"
#include "dhdmm/workloads/workloads.h"
#include "json.hpp"

namespace dhdmm::cli {
namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitAbort = 1;
constexpr int kExitConfig = 2;
constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
  int64_t clients = 100;
  double theta = 0.0;
  std::optional<double> rho;
  std::optional<double> epsilon;
  double delta = 1e-5;
  double gamma = 1000.0;
  uint64_t prime = fieldcodec::kMersenne61;
  std::string mode = "semi-honest";
  std::string suite = "standard";
  std::string workload = "marginals:2";
  std::string data;
  std::string mapping;
  int64_t records_per_client = 1;
  std::string client_bw = "unlimited";
  std::string client_down_bw = "unlimited";
  std::string server_bw = "unlimited";
  double latency = 0.0;
  std::string dropouts;
  double max_dropout_fraction = 0.3;
  double degree_factor = 4.0;
  int trials = 1;
  uint64_t seed = 1;
  bool noise_disabled = false;
  bool oracle_check = false;
  bool baselines = false;
  std::string out = "dhdmm_out";
  // sweep only
  std::string axis;
  std::vector<std::string> values;
  // account only
  double sensitivity = 1.0;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double Rho(const ExperimentConfig& c) {
  if (c.rho && c.epsilon) throw ConfigError("give --rho or --epsilon, not both");
  if (c.epsilon) {
    if (!(*c.epsilon > 0)) throw ConfigError("--epsilon must be positive");
    return dpnoise::EpsilonToZcdp(*c.epsilon, c.delta);
  }
  return c.rho.value_or(0.1);
}

// Bytes per second. Accepts "unlimited", a plain number of bytes per
// second, or a number with a bit-rate unit: bps, kbps, Mbps, Gbps.
double ParseBandwidth(const std::string& text) {
  if (text == "unlimited" || text == "inf") return simnet::kUnlimited;
  static const std::vector<std::pair<std::string, double>> kUnits = {
      {"Gbps", 1e9 / 8}, {"Mbps", 1e6 / 8}, {"kbps", 1e3 / 8}, {"bps", 1.0 / 8}};
  double scale = 1.0;
  std::string number = text;
  for (const auto& [unit, factor] : kUnits) {
    if (number.size() > unit.size() &&
        number.compare(number.size() - unit.size(), unit.size(), unit) == 0) {
      number.resize(number.size() - unit.size());
      scale = factor;
      break;
    }
  }
  double v = 0;
  if (!absl::SimpleAtod(number, &v) || !(v > 0)) {
    throw ConfigError("bad bandwidth '" + text + "'");
  }
  return v * scale;
}

// Either a fraction of clients that drop at a random round, or an explicit
// list "client:round[:before|after],...".
std::vector<simnet::DropoutEvent> ParseDropouts(const std::string& text,
                                                int64_t n, uint64_t seed) {
  std::vector<simnet::DropoutEvent> out;
  if (text.empty()) return out;
  double fraction = 0;
  if (absl::SimpleAtod(text, &fraction) && text.find(':') == std::string::npos) {
    if (!(fraction >= 0 && fraction < 1)) {
      throw ConfigError("dropout fraction must lie in [0, 1)");
    }
    const int64_t count =
        static_cast<int64_t>(std::floor(fraction * n + 1e-9));
    Rng rng(seed);
    Rng pick = rng.Derive("cli.dropouts");
    std::vector<uint32_t> ids(n);
    for (int64_t i = 0; i < n; ++i) ids[i] = static_cast<uint32_t>(i);
    for (int64_t i = 0; i < count; ++i) {
      std::swap(ids[i], ids[i + pick.UniformBelow(n - i)]);
      out.push_back({.client = ids[i],
                     .round = static_cast<uint8_t>(1 + pick.UniformBelow(5)),
                     .phase = pick.FairCoin() ? simnet::DropPhase::kBefore
                                              : simnet::DropPhase::kAfter});
    }
    return out;
  }
  for (absl::string_view item : absl::StrSplit(text, ',', absl::SkipEmpty())) {
    std::vector<std::string> parts = absl::StrSplit(item, ':');
    uint32_t client = 0, round = 0;
    if (parts.size() < 2 || parts.size() > 3 ||
        !absl::SimpleAtoi(parts[0], &client) ||
        !absl::SimpleAtoi(parts[1], &round) || round < 1 || round > 5 ||
        client >= n) {
      throw ConfigError("bad dropout '" + std::string(item) +
                        "'; expected client:round[:before|after]");
    }
    simnet::DropPhase phase = simnet::DropPhase::kBefore;
    if (parts.size() == 3) {
      if (parts[2] == "after") {
        phase = simnet::DropPhase::kAfter;
      } else if (parts[2] != "before") {
        throw ConfigError("dropout phase must be before or after");
      }
    }
    out.push_back({.client = client, .round = static_cast<uint8_t>(round),
                   .phase = phase});
  }
  return out;
}

int ThreadLimit() {
  int limit = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("DHDMM_THREADS")) {
    int v = 0;
    if (!absl::SimpleAtoi(env, &v) || v < 1) {
      throw ConfigError("DHDMM_THREADS must be a positive integer");
    }
    limit = v;
  }
  return limit;
}

// Runs fn(0..count-1) on up to ThreadLimit() threads. Results land in the
// caller's per-index slots, so output order is fixed.
template <typename Fn>
void ParallelFor(int count, Fn fn) {
  const int threads = std::min(ThreadLimit(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Everything a trial needs that does not change between trials.
struct Setup {
  ExperimentConfig config;
  protocol::ProtocolParams params;
  simnet::NetConfig net;
  std::optional<matmech::Workload> workload;
  std::optional<protocol::PreparedStrategy> strategy;
  std::vector<protocol::ClientInput> inputs;
  std::vector<matmech::Record> pooled;
  matmech::Vector exact;
};

void Check(const absl::Status& s) {
  if (!s.ok()) throw ConfigError(std::string(s.message()));
}

// `reuse` skips the optimizer when an earlier setup already optimized the
// same workload.
absl::StatusOr<Setup> Prepare(const ExperimentConfig& c,
                              const protocol::PreparedStrategy* reuse = nullptr) {
  Setup s;
  s.config = c;
  protocol::ProtocolParams& p = s.params;
  if (c.clients < 1) throw ConfigError("--clients must be at least 1");
  if (c.trials < 1) throw ConfigError("--trials must be at least 1");
  if (c.records_per_client < 0) throw ConfigError("--records-per-client must be >= 0");
  p.n = c.clients;
  p.theta = c.theta;
  p.rho = Rho(c);
  p.delta = c.delta;
  p.gamma = c.gamma;
  p.p = c.prime;
  auto mode = secagg::ParseMode(c.mode);
  if (!mode) throw ConfigError("--mode must be semi-honest or malicious");
  p.mode = *mode;
  if (c.suite == "standard") {
    p.agg.suite = secagg::SuiteKind::kStandard;
  } else if (c.suite == "insecure-fast") {
    p.agg.suite = secagg::SuiteKind::kInsecureFast;
  } else {
    throw ConfigError("--suite must be standard or insecure-fast");
  }
  p.agg.max_dropout_fraction = c.max_dropout_fraction;
  p.agg.degree_factor = c.degree_factor;
  p.noise_disabled = c.noise_disabled;
  p.seed = c.seed;
  Check(p.Validate());

  s.net.client_up_bw = ParseBandwidth(c.client_bw);
  s.net.client_down_bw = ParseBandwidth(c.client_down_bw);
  s.net.server_bw = ParseBandwidth(c.server_bw);
  s.net.latency = c.latency;
  Check(s.net.Validate());

  std::vector<matmech::Record> records;
  std::optional<matmech::DomainSpec> data_domain;
  if (!c.data.empty()) {
    if (c.mapping.empty()) throw ConfigError("--data needs --mapping");
    auto loaded = workloads::LoadRecordsCsv(c.data, c.mapping);
    if (!loaded.ok()) throw ConfigError(std::string(loaded.status().message()));
    records = std::move(loaded->records);
    data_domain = loaded->domain;
  }
  auto spec = workloads::ParseWorkloadSpec(c.workload);
  Check(spec.status());
  if (data_domain && spec->kind == workloads::WorkloadSpec::Kind::kMarginals) {
    // Built-in domains are fixed; marginals follow the data instead.
    auto w = workloads::BuildMarginals(*data_domain, spec->k);
    Check(w.status());
    s.workload.emplace(*std::move(w));
  } else {
    auto w = workloads::BuildWorkload(*spec);
    Check(w.status());
    s.workload.emplace(*std::move(w));
  }
  if (!data_domain) {
    records = workloads::SyntheticRecords(s.workload->domain(),
                                          c.clients * c.records_per_client,
                                          c.seed);
  } else if (!(*data_domain == s.workload->domain())) {
    throw ConfigError("workload domain does not match the data mapping");
  }
  ParseDropouts(c.dropouts, c.clients, c.seed);
  auto parts = workloads::Partition(records, c.clients, c.seed + 1);
  s.inputs.resize(c.clients);
  for (int64_t i = 0; i < c.clients; ++i) s.inputs[i].records = std::move(parts[i]);
  s.pooled = std::move(records);

  if (reuse && reuse->plan.workload().matrix() == s.workload->matrix()) {
    s.strategy = *reuse;
  } else {
    auto prepared = protocol::ServerRound1(p, *s.workload);
    if (!prepared.ok()) return prepared.status();
    s.strategy.emplace(*std::move(prepared));
  }
  auto x = matmech::Vectorize(s.pooled, s.workload->domain());
  if (!x.ok()) return x.status();
  DHDMM_ASSIGN_OR_RETURN(s.exact, s.strategy->plan.Exact(*x));
  return s;
}

struct TrialRow {
  int trial = 0;
  uint64_t seed = 0;
  absl::Status status;
  double rmse = NAN;
  double central_rmse = NAN;
  double local_rmse = NAN;
  bool oracle_ok = true;
  std::optional<protocol::ProtocolResult> result;
  simnet::RunMetrics metrics;
};

TrialRow RunTrial(const Setup& s, int trial) {
  TrialRow row;
  row.trial = trial;
  row.seed = s.config.seed + static_cast<uint64_t>(trial);
  protocol::ProtocolParams p = s.params;
  p.seed = row.seed;
  protocol::RunOptions opts;
  opts.net = s.net;
  opts.net.dropout_schedule = ParseDropouts(s.config.dropouts, p.n, row.seed);
  opts.strategy = s.strategy;
  protocol::SimulationOutcome outcome =
      protocol::RunSimulation(p, *s.workload, s.inputs, opts);
  row.status = outcome.status;
  row.metrics = outcome.metrics;
  if (outcome.result) {
    row.rmse = *baselines::Rmse(outcome.result->answer, s.exact);
    if (s.config.oracle_check) {
      matmech::Vector bound = protocol::TruncationBound(
          s.strategy->plan.reconstruction(), p.n, p.gamma);
      for (Eigen::Index q = 0; q < bound.size(); ++q) {
        if (std::abs(outcome.result->answer(q) - s.exact(q)) > bound(q) + 1e-9) {
          row.oracle_ok = false;
        }
      }
    }
    row.result = std::move(outcome.result);
  }
  if (s.config.baselines) {
    Rng root(row.seed);
    const uint64_t central_seed = root.Derive("cli.central")();
    const uint64_t local_seed = root.Derive("cli.local")();
    row.central_rmse =
        baselines::CentralHdmm(s.strategy->plan, s.pooled, p.rho, central_seed)
            ->rmse;
    std::vector<std::vector<matmech::Record>> clients;
    for (const auto& in : s.inputs) clients.push_back(in.records);
    row.local_rmse =
        baselines::LocalGaussian(s.strategy->plan, clients, p.rho, local_seed)
            ->rmse;
  }
  return row;
}

std::vector<TrialRow> RunTrials(const Setup& s) {
  std::vector<TrialRow> rows(s.config.trials);
  ParallelFor(s.config.trials, [&](int t) { rows[t] = RunTrial(s, t); });
  return rows;
}

std::string Num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream o;
  o.precision(10);
  o << v;
  return o.str();
}

const char* kTrialHeader =
    "trial,seed,clients,theta,rho,epsilon,status,rmse,central_rmse,"
    "local_rmse,survivors,total_time_s,avg_client_compute_s,"
    "server_compute_s,avg_client_bytes_sent,avg_client_bytes_received,"
    "server_bytes_sent,server_bytes_received";

std::string TrialCsvRow(const Setup& s, const TrialRow& r) {
  const auto& m = r.metrics;
  std::string status = r.status.ok() ? "ok" : ErrorKindName(
      GetErrorKind(r.status).value_or(ErrorKind::kProtocolAborted));
  return absl::StrCat(
      r.trial, ",", r.seed, ",", s.params.n, ",", Num(s.params.theta), ",",
      Num(s.params.rho), ",", Num(dpnoise::ZcdpToEpsilon(s.params.rho, s.params.delta)),
      ",", status, ",", Num(r.rmse), ",", Num(r.central_rmse), ",",
      Num(r.local_rmse), ",", r.result ? r.result->survivors.size() : 0, ",",
      Num(m.total_time_s), ",", Num(m.AvgClientCompute()), ",",
      Num(m.server.compute_s), ",", Num(m.AvgClientBytesSent()), ",",
      Num(m.AvgClientBytesReceived()), ",", m.server.bytes_sent, ",",
      m.server.bytes_received);
}

double MeanOf(const std::vector<TrialRow>& rows,
              double (*get)(const TrialRow&)) {
  double sum = 0;
  int count = 0;
  for (const auto& r : rows) {
    double v = get(r);
    if (!std::isnan(v)) {
      sum += v;
      ++count;
    }
  }
  return count ? sum / count : NAN;
}

json SummarizeTrials(const Setup& s, const std::vector<TrialRow>& rows) {
  json j;
  int ok = 0;
  for (const auto& r : rows) ok += r.status.ok();
  j["trials"] = rows.size();
  j["succeeded"] = ok;
  auto put = [&](const char* key, double v) {
    j[key] = std::isnan(v) ? json(nullptr) : json(v);
  };
  put("rmse_mean", MeanOf(rows, [](const TrialRow& r) { return r.rmse; }));
  put("central_rmse_mean",
      MeanOf(rows, [](const TrialRow& r) { return r.central_rmse; }));
  put("local_rmse_mean",
      MeanOf(rows, [](const TrialRow& r) { return r.local_rmse; }));
  put("total_time_s_mean",
      MeanOf(rows, [](const TrialRow& r) { return r.metrics.total_time_s; }));
  put("avg_client_compute_s_mean", MeanOf(rows, [](const TrialRow& r) {
        return r.metrics.AvgClientCompute();
      }));
  put("server_compute_s_mean",
      MeanOf(rows, [](const TrialRow& r) { return r.metrics.server.compute_s; }));
  put("avg_client_bytes_sent_mean", MeanOf(rows, [](const TrialRow& r) {
        return r.metrics.AvgClientBytesSent();
      }));
  put("server_bytes_received_mean", MeanOf(rows, [](const TrialRow& r) {
        return static_cast<double>(r.metrics.server.bytes_received);
      }));
  (void)s;
  return j;
}

json ConfigJson(const ExperimentConfig& c, double rho) {
  return json{{"clients", c.clients},
              {"theta", c.theta},
              {"rho", rho},
              {"delta", c.delta},
              {"gamma", c.gamma},
              {"prime", c.prime},
              {"mode", c.mode},
              {"suite", c.suite},
              {"workload", c.workload},
              {"data", c.data},
              {"records_per_client", c.records_per_client},
              {"client_bw", c.client_bw},
              {"client_down_bw", c.client_down_bw},
              {"server_bw", c.server_bw},
              {"latency", c.latency},
              {"dropouts", c.dropouts},
              {"max_dropout_fraction", c.max_dropout_fraction},
              {"degree_factor", c.degree_factor},
              {"trials", c.trials},
              {"seed", c.seed},
              {"noise_disabled", c.noise_disabled},
              {"baselines", c.baselines}};
}

void WriteFile(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
  if (!out) throw ConfigError("cannot write " + path.string());
}

std::filesystem::path OutDir(const ExperimentConfig& c) {
  std::filesystem::path dir(c.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + c.out);
  return dir;
}

int ExitCodeFor(const absl::Status& s) {
  return HasErrorKind(s, ErrorKind::kInvalidConfig) ? kExitConfig : kExitAbort;
}

int ReportFailure(const absl::Status& s) {
  std::cerr << "error: " << s.message() << "\n";
  return ExitCodeFor(s);
}

int CmdRun(const ExperimentConfig& c, const std::string& config_record) {
  auto setup = Prepare(c);
  if (!setup.ok()) return ReportFailure(setup.status());
  std::vector<TrialRow> rows = RunTrials(*setup);
  const auto dir = OutDir(c);

  std::string csv = std::string(kTrialHeader) + "\n";
  for (const auto& r : rows) csv += TrialCsvRow(*setup, r) + "\n";
  WriteFile(dir / "runs.csv", csv);

  const TrialRow& first = rows.front();
  WriteFile(dir / "parties.csv", first.metrics.PartyCsv());
  WriteFile(dir / "timing.json", first.metrics.TimingJson().dump(2) + "\n");
  json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["command"] = "run";
  summary["config"] = ConfigJson(c, setup->params.rho);
  summary["results"] = SummarizeTrials(*setup, rows);
  summary["metrics"] = first.metrics.SummaryJson();
  if (first.result) {
    summary["privacy"] = dpnoise::ToJson(first.result->privacy);
    WriteFile(dir / "privacy.json",
              dpnoise::ToJson(first.result->privacy).dump(2) + "\n");
    WriteFile(dir / "result.json", first.result->ToJson().dump(2) + "\n");
  }
  WriteFile(dir / "summary.json", summary.dump(2) + "\n");
  WriteFile(dir / "config.toml", config_record);

  int code = kExitOk;
  for (const auto& r : rows) {
    if (!r.status.ok()) {
      std::cerr << "trial " << r.trial << " (seed " << r.seed
                << "): " << r.status.message() << "\n";
      code = std::max(code, ExitCodeFor(r.status));
    } else if (!r.oracle_ok) {
      std::cerr << "trial " << r.trial << ": answer outside the truncation "
                << "bound of the exact answer\n";
      code = std::max(code, kExitAbort);
    }
  }
  if (c.oracle_check && !c.noise_disabled) {
    std::cerr << "note: --oracle-check compares against the exact answer and "
                 "only passes reliably with --noise-disabled\n";
  }
  std::cout << summary["results"].dump() << "\n";
  return code;
}

int CmdSweep(ExperimentConfig c, const std::string& config_record) {
  static const std::vector<std::string> kAxes = {"clients", "theta", "epsilon",
                                                 "bandwidth", "latency"};
  if (std::find(kAxes.begin(), kAxes.end(), c.axis) == kAxes.end()) {
    throw ConfigError("--axis must be one of clients, theta, epsilon, "
                      "bandwidth, latency");
  }
  if (c.values.empty()) throw ConfigError("sweep grid is empty");
  const auto dir = OutDir(c);
  std::string csv = absl::StrCat(
      "axis,value,trials,succeeded,rho,epsilon,rmse_mean,central_rmse_mean,"
      "local_rmse_mean,total_time_s_mean,avg_client_compute_s_mean,"
      "server_compute_s_mean,avg_client_bytes_sent_mean,"
      "server_bytes_received_mean\n");
  std::string trials_csv = std::string("axis,value,") + kTrialHeader + "\n";
  json points = json::array();
  int code = kExitOk;
  std::optional<protocol::PreparedStrategy> cached;
  for (const std::string& value : c.values) {
    ExperimentConfig point = c;
    double v = 0;
    if (c.axis != "bandwidth" && !absl::SimpleAtod(value, &v)) {
      throw ConfigError("bad " + c.axis + " value '" + value + "'");
    }
    if (c.axis == "clients") {
      point.clients = static_cast<int64_t>(v);
    } else if (c.axis == "theta") {
      point.theta = v;
    } else if (c.axis == "epsilon") {
      point.epsilon = v;
      point.rho.reset();
    } else if (c.axis == "bandwidth") {
      point.client_bw = value;
    } else {
      point.latency = v;
    }
    auto setup = Prepare(point, cached ? &*cached : nullptr);
    if (!setup.ok()) return ReportFailure(setup.status());
    cached = setup->strategy;
    std::vector<TrialRow> rows = RunTrials(*setup);
    json s = SummarizeTrials(*setup, rows);
    auto f = [&](const char* key) {
      return s[key].is_null() ? std::string() : Num(s[key].get<double>());
    };
    csv += absl::StrCat(
        c.axis, ",", value, ",", rows.size(), ",", s["succeeded"].get<int>(),
        ",", Num(setup->params.rho), ",",
        Num(dpnoise::ZcdpToEpsilon(setup->params.rho, setup->params.delta)),
        ",", f("rmse_mean"), ",", f("central_rmse_mean"), ",",
        f("local_rmse_mean"), ",", f("total_time_s_mean"), ",",
        f("avg_client_compute_s_mean"), ",", f("server_compute_s_mean"), ",",
        f("avg_client_bytes_sent_mean"), ",", f("server_bytes_received_mean"),
        "\n");
    for (const auto& r : rows) {
      trials_csv += absl::StrCat(c.axis, ",", value, ",", TrialCsvRow(*setup, r), "\n");
      if (!r.status.ok()) {
        std::cerr << c.axis << "=" << value << " trial " << r.trial << ": "
                  << r.status.message() << "\n";
        code = std::max(code, ExitCodeFor(r.status));
      }
    }
    s["value"] = value;
    points.push_back(s);
  }
  WriteFile(dir / "sweep.csv", csv);
  WriteFile(dir / "runs.csv", trials_csv);
  json summary{{"schema_version", kSchemaVersion},
               {"command", "sweep"},
               {"axis", c.axis},
               {"config", ConfigJson(c, Rho(c))},
               {"points", points}};
  WriteFile(dir / "summary.json", summary.dump(2) + "\n");
  WriteFile(dir / "config.toml", config_record);
  std::cout << csv;
  return code;
}

int CmdAccount(const ExperimentConfig& c) {
  dpnoise::PrivacyParams p{.rho = Rho(c),
                           .theta = c.theta,
                           .n = c.clients,
                           .gamma = c.gamma,
                           .delta2 = c.sensitivity};
  Check(p.Validate());
  if (!(c.delta > 0 && c.delta < 1)) throw ConfigError("--delta must lie in (0, 1)");
  dpnoise::PrivacyReport report = dpnoise::Account(p, c.delta);
  std::cout << "kappa = " << report.kappa << " (log10 " << report.log10_kappa
            << ")\nrho' = " << report.rho_prime << "\nepsilon = "
            << report.epsilon << " at delta = " << report.delta << "\n"
            << dpnoise::ToJson(report).dump(2) << "\n";
  return kExitOk;
}

void AddCommonOptions(CLI::App* cmd, ExperimentConfig& c) {
  cmd->add_option("--clients", c.clients, "number of clients n");
  cmd->add_option("--theta", c.theta, "bound on the corrupted-client fraction");
  cmd->add_option("--rho", c.rho, "target zCDP budget");
  cmd->add_option("--epsilon", c.epsilon, "target epsilon, converted at --delta");
  cmd->add_option("--delta", c.delta, "delta for (epsilon, delta) conversion");
  cmd->add_option("--gamma", c.gamma, "fixed-point scaling factor");
}

void AddRunOptions(CLI::App* cmd, ExperimentConfig& c) {
  AddCommonOptions(cmd, c);
  cmd->add_option("--prime", c.prime, "field modulus p");
  cmd->add_option("--mode", c.mode, "semi-honest or malicious");
  cmd->add_option("--suite", c.suite,
                  "secure aggregation primitives: standard or insecure-fast "
                  "(benchmark only, no security)");
  cmd->add_option("--workload", c.workload,
                  "marginals:K, identity, total, sf1:S or file:PATH");
  cmd->add_option("--data", c.data, "records CSV (default: synthetic data)");
  cmd->add_option("--mapping", c.mapping, "domain mapping JSON for --data");
  cmd->add_option("--records-per-client", c.records_per_client,
                  "synthetic records per client");
  cmd->add_option("--client-bw", c.client_bw,
                  "client upload bandwidth: bytes/s, or e.g. 1Mbps");
  cmd->add_option("--client-down-bw", c.client_down_bw,
                  "client download bandwidth");
  cmd->add_option("--server-bw", c.server_bw, "server bandwidth, each direction");
  cmd->add_option("--latency", c.latency, "seconds per message");
  cmd->add_option("--dropouts", c.dropouts,
                  "fraction of clients dropping at random rounds, or a list "
                  "client:round[:before|after],...");
  cmd->add_option("--max-dropout-fraction", c.max_dropout_fraction,
                  "dropout tolerance of secure aggregation");
  cmd->add_option("--degree-factor", c.degree_factor,
                  "neighbour graph degree factor c in c log2 n");
  cmd->add_option("--trials", c.trials, "independent runs");
  cmd->add_option("--seed", c.seed, "master seed; trial t uses seed + t");
  cmd->add_flag("--noise-disabled", c.noise_disabled,
                "debug: clients add no noise");
  cmd->add_flag("--oracle-check", c.oracle_check,
                "fail unless answers are within the truncation bound of the "
                "exact answers");
  cmd->add_flag("--baselines", c.baselines,
                "also run the central and local baselines");
  cmd->add_option("--out", c.out, "output directory");
}

// TOML section for `cmd` with every option's effective value, loadable
// through --config. Unset options are left out.
std::string ConfigRecord(const CLI::App* cmd) {
  std::string out = "[" + cmd->get_name() + "]\n";
  for (absl::string_view line :
       absl::StrSplit(cmd->config_to_str(true, false), '\n', absl::SkipEmpty())) {
    if (absl::EndsWith(line, "=\"\"") || absl::EndsWith(line, "=\"{}\"")) continue;
    absl::StrAppend(&out, line, "\n");
  }
  return out;
}

// CLI11 reads --config only before the subcommand; hoist it.
std::vector<std::string> HoistConfig(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> front, rest;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      front.push_back(args[i]);
      front.push_back(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      front.push_back(args[i]);
    } else {
      rest.push_back(args[i]);
    }
  }
  front.insert(front.end(), rest.begin(), rest.end());
  std::reverse(front.begin(), front.end());
  return front;
}

int Main(int argc, char** argv) {
  CLI::App app{"Distributed matrix-mechanism protocol simulator"};
  app.set_config("--config", "", "TOML experiment file");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  ExperimentConfig run_cfg, sweep_cfg, account_cfg;
  CLI::App* run = app.add_subcommand("run", "simulate protocol runs");
  AddRunOptions(run, run_cfg);
  CLI::App* sweep = app.add_subcommand("sweep", "run a grid over one parameter");
  AddRunOptions(sweep, sweep_cfg);
  sweep->add_option("--axis", sweep_cfg.axis,
                    "clients, theta, epsilon, bandwidth or latency")
      ->required();
  sweep->add_option("--values", sweep_cfg.values, "grid points")->delimiter(',');
  CLI::App* account = app.add_subcommand("account", "print the privacy report");
  AddCommonOptions(account, account_cfg);
  account->add_option("--sensitivity", account_cfg.sensitivity,
                      "L2 sensitivity of the strategy");

  std::vector<std::string> args = HoistConfig(argc, argv);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  try {
    if (*run) return CmdRun(run_cfg, ConfigRecord(run));
    if (*sweep) return CmdSweep(sweep_cfg, ConfigRecord(sweep));
    return CmdAccount(account_cfg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace
}  // namespace dhdmm::cli

int main(int argc, char** argv) { return dhdmm::cli::Main(argc, argv); }
