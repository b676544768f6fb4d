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

#include "dhdmm/workloads/workloads.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "dhdmm/matmech/workload_io.h"
#include "dhdmm/random.h"
#include "dhdmm/status.h"
#include "json.hpp"

namespace dhdmm::workloads {
namespace {

using matmech::Attribute;
using matmech::Matrix;

absl::Status ConfigError(const std::string& what) {
  return MakeError(ErrorKind::kInvalidConfig, what);
}

// Stacks row blocks into one matrix.
Matrix Stack(const std::vector<Matrix>& blocks, int64_t cols) {
  int64_t rows = 0;
  for (const Matrix& b : blocks) rows += b.rows();
  Matrix out(rows, cols);
  int64_t at = 0;
  for (const Matrix& b : blocks) {
    out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

// Advances `combo` to the next k-subset of [0, m) in lexicographic order.
bool NextCombination(std::vector<int>& combo, int m) {
  const int k = static_cast<int>(combo.size());
  for (int i = k - 1; i >= 0; --i) {
    if (combo[i] < m - k + i) {
      ++combo[i];
      for (int j = i + 1; j < k; ++j) combo[j] = combo[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(Trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(Trim(cur));
  return fields;
}

}  // namespace

absl::StatusOr<Workload> BuildMarginals(const DomainSpec& domain, int k) {
  const int m = domain.num_attributes();
  if (k < 0 || k > m) {
    return ConfigError(absl::StrCat("marginal order ", k,
                                    " outside [0, ", m, "]"));
  }
  std::vector<Matrix> blocks;
  std::vector<int> combo(k);
  for (int i = 0; i < k; ++i) combo[i] = i;
  do {
    DHDMM_ASSIGN_OR_RETURN(Matrix rows, matmech::MarginalRows(domain, combo));
    blocks.push_back(std::move(rows));
  } while (NextCombination(combo, m));
  return Workload::Create(Stack(blocks, domain.size()), domain);
}

absl::StatusOr<Workload> BuildIdentity(const DomainSpec& domain) {
  return Workload::Create(Matrix::Identity(domain.size(), domain.size()),
                          domain);
}

absl::StatusOr<Workload> BuildTotal(const DomainSpec& domain) {
  return Workload::Create(Matrix::Ones(1, domain.size()), domain);
}

absl::StatusOr<DomainSpec> Sf1Domain(int scale) {
  if (scale < 1) return ConfigError("sf1 scale must be at least 1");
  return DomainSpec::Create({{"sex", 2},
                             {"hispanic", 2},
                             {"race", 4},
                             {"relationship", 2},
                             {"age", 8 * static_cast<int64_t>(scale)}});
}

absl::StatusOr<Workload> BuildSf1Shaped(int scale) {
  DHDMM_ASSIGN_OR_RETURN(DomainSpec domain, Sf1Domain(scale));
  const int kAge = 4;
  const int64_t d = domain.size();
  const int m = domain.num_attributes();
  std::vector<Matrix> blocks;
  auto add_marginal = [&](std::vector<int> attrs) -> absl::Status {
    DHDMM_ASSIGN_OR_RETURN(Matrix rows, matmech::MarginalRows(domain, attrs));
    blocks.push_back(std::move(rows));
    return absl::OkStatus();
  };
  DHDMM_RETURN_IF_ERROR(add_marginal({}));
  for (int a = 0; a < m; ++a) DHDMM_RETURN_IF_ERROR(add_marginal({a}));
  for (int a = 0; a < kAge; ++a) DHDMM_RETURN_IF_ERROR(add_marginal({a, kAge}));
  DHDMM_RETURN_IF_ERROR(add_marginal({1, 2}));
  DHDMM_RETURN_IF_ERROR(add_marginal({0, 2}));

  // age < a, split by sex.
  const int64_t ages = domain.attributes()[kAge].cardinality;
  Matrix ranges = Matrix::Zero(2 * (ages - 1), d);
  for (int64_t cell = 0; cell < d; ++cell) {
    Record r = domain.Unflatten(cell);
    for (int64_t a = r[kAge] + 1; a < ages; ++a) {
      ranges(2 * (a - 1) + r[0], cell) = 1.0;
    }
  }
  blocks.push_back(std::move(ranges));

  // Random conjunctions: each attribute is constrained with probability 1/2
  // to a random nonempty proper subset of its values.
  Rng rng(0x5f1000 + static_cast<uint64_t>(scale));
  const int64_t predicates = 24 * static_cast<int64_t>(scale);
  Matrix random_rows(predicates, d);
  for (int64_t q = 0; q < predicates; ++q) {
    std::vector<std::vector<bool>> allowed(m);
    for (int a = 0; a < m; ++a) {
      const int64_t card = domain.attributes()[a].cardinality;
      allowed[a].assign(card, true);
      if (!rng.FairCoin()) continue;
      // Contiguous value range, the shape of census range predicates.
      uint64_t lo = rng.UniformBelow(card);
      uint64_t len = 1 + rng.UniformBelow(card - 1);
      for (int64_t v = 0; v < card; ++v) {
        allowed[a][v] = v >= static_cast<int64_t>(lo) &&
                        v < static_cast<int64_t>(lo + len);
      }
    }
    for (int64_t cell = 0; cell < d; ++cell) {
      Record r = domain.Unflatten(cell);
      bool hit = true;
      for (int a = 0; a < m && hit; ++a) hit = allowed[a][r[a]];
      random_rows(q, cell) = hit ? 1.0 : 0.0;
    }
  }
  blocks.push_back(std::move(random_rows));
  return Workload::Create(Stack(blocks, d), domain);
}

DomainSpec AdultDomain() {
  return DomainSpec::Create({{"age", 4},
                             {"education", 4},
                             {"hours_per_week", 4},
                             {"sex", 2},
                             {"income", 2}})
      .value();
}

std::vector<Record> SyntheticRecords(const DomainSpec& domain, int64_t count,
                                     uint64_t seed) {
  constexpr int kComponents = 4;
  Rng rng(seed);
  Rng model = rng.Derive("synthetic.model");
  Rng draws = rng.Derive("synthetic.draws");
  const int m = domain.num_attributes();
  // cdf[c][a] is the cumulative distribution of attribute a in component c.
  std::vector<std::vector<std::vector<double>>> cdf(
      kComponents, std::vector<std::vector<double>>(m));
  for (int c = 0; c < kComponents; ++c) {
    for (int a = 0; a < m; ++a) {
      const int64_t card = domain.attributes()[a].cardinality;
      std::vector<double> w(card);
      double total = 0;
      for (double& x : w) {
        double u = model.UniformDouble();
        x = 0.05 + u * u * u;
        total += x;
      }
      double acc = 0;
      for (double& x : w) {
        acc += x / total;
        x = acc;
      }
      cdf[c][a] = std::move(w);
    }
  }
  std::vector<Record> out;
  out.reserve(count);
  for (int64_t i = 0; i < count; ++i) {
    const auto& comp = cdf[draws.UniformBelow(kComponents)];
    Record r(m);
    for (int a = 0; a < m; ++a) {
      double u = draws.UniformDouble();
      const auto& c = comp[a];
      auto it = std::upper_bound(c.begin(), c.end(), u);
      r[a] = static_cast<int32_t>(
          std::min<ptrdiff_t>(it - c.begin(), c.size() - 1));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<Record>> Partition(std::span<const Record> records,
                                           int64_t n, uint64_t seed) {
  std::vector<std::vector<Record>> out(std::max<int64_t>(n, 1));
  Rng rng(seed);
  for (const Record& r : records) out[rng.UniformBelow(out.size())].push_back(r);
  return out;
}

absl::StatusOr<WorkloadSpec> ParseWorkloadSpec(std::string_view text) {
  WorkloadSpec spec;
  std::string_view head = text.substr(0, text.find(':'));
  std::string_view arg =
      head.size() < text.size() ? text.substr(head.size() + 1) : "";
  auto parse_int = [&](int& out) -> absl::Status {
    if (!absl::SimpleAtoi(std::string(arg), &out)) {
      return ConfigError(absl::StrCat("bad workload argument in '",
                                      std::string(text), "'"));
    }
    return absl::OkStatus();
  };
  if (head == "marginals") {
    spec.kind = WorkloadSpec::Kind::kMarginals;
    DHDMM_RETURN_IF_ERROR(parse_int(spec.k));
  } else if (head == "identity" && arg.empty()) {
    spec.kind = WorkloadSpec::Kind::kIdentity;
  } else if (head == "total" && arg.empty()) {
    spec.kind = WorkloadSpec::Kind::kTotal;
  } else if (head == "sf1") {
    spec.kind = WorkloadSpec::Kind::kSf1Shaped;
    DHDMM_RETURN_IF_ERROR(parse_int(spec.scale));
    if (spec.scale < 1) return ConfigError("sf1 scale must be at least 1");
  } else if (head == "file" && !arg.empty()) {
    spec.kind = WorkloadSpec::Kind::kCustom;
    spec.path = std::string(arg);
  } else {
    return ConfigError(absl::StrCat("unknown workload '", std::string(text),
                                    "'; expected marginals:K, identity, "
                                    "total, sf1:S or file:PATH"));
  }
  return spec;
}

absl::StatusOr<Workload> BuildWorkload(const WorkloadSpec& spec) {
  switch (spec.kind) {
    case WorkloadSpec::Kind::kMarginals:
      return BuildMarginals(AdultDomain(), spec.k);
    case WorkloadSpec::Kind::kIdentity:
      return BuildIdentity(AdultDomain());
    case WorkloadSpec::Kind::kTotal:
      return BuildTotal(AdultDomain());
    case WorkloadSpec::Kind::kSf1Shaped:
      return BuildSf1Shaped(spec.scale);
    case WorkloadSpec::Kind::kCustom:
      return matmech::LoadWorkloadFile(spec.path);
  }
  return ConfigError("unknown workload kind");
}

absl::StatusOr<CsvDataset> LoadRecordsCsv(const std::string& csv_path,
                                          const std::string& mapping_path) {
  std::ifstream mapping_in(mapping_path);
  if (!mapping_in) return ConfigError("cannot open mapping file " + mapping_path);
  nlohmann::json mapping = nlohmann::json::parse(mapping_in, nullptr, false);
  if (mapping.is_discarded() || !mapping.contains("attributes") ||
      !mapping["attributes"].is_array()) {
    return ConfigError("mapping file " + mapping_path +
                       " needs an \"attributes\" array");
  }
  std::vector<Attribute> attrs;
  std::vector<std::map<std::string, int32_t>> labels;
  for (const auto& a : mapping["attributes"]) {
    if (!a.contains("name") || !a["name"].is_string()) {
      return ConfigError("mapping attribute without a name");
    }
    Attribute attr{a["name"].get<std::string>(), 0};
    std::map<std::string, int32_t> index;
    if (a.contains("values")) {
      for (const auto& v : a["values"]) {
        if (!v.is_string()) return ConfigError("mapping values must be strings");
        index.emplace(v.get<std::string>(), static_cast<int32_t>(index.size()));
      }
      attr.cardinality = static_cast<int64_t>(index.size());
    } else if (a.contains("cardinality") && a["cardinality"].is_number_integer()) {
      attr.cardinality = a["cardinality"].get<int64_t>();
    } else {
      return ConfigError("mapping attribute " + attr.name +
                         " needs \"values\" or \"cardinality\"");
    }
    attrs.push_back(std::move(attr));
    labels.push_back(std::move(index));
  }
  DHDMM_ASSIGN_OR_RETURN(DomainSpec domain, DomainSpec::Create(attrs));

  std::ifstream in(csv_path);
  if (!in) return ConfigError("cannot open records file " + csv_path);
  std::string line;
  if (!std::getline(in, line)) return ConfigError("records file is empty");
  std::vector<std::string> header = SplitCsvLine(line);
  std::vector<size_t> column(attrs.size());
  for (size_t a = 0; a < attrs.size(); ++a) {
    auto it = std::find(header.begin(), header.end(), attrs[a].name);
    if (it == header.end()) {
      return ConfigError("records file has no column " + attrs[a].name);
    }
    column[a] = it - header.begin();
  }
  CsvDataset out{domain, {}};
  int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    std::vector<std::string> fields = SplitCsvLine(line);
    Record r(attrs.size());
    for (size_t a = 0; a < attrs.size(); ++a) {
      auto bad = [&](const std::string& why) {
        return MakeError(ErrorKind::kInvalidRecord,
                         absl::StrCat(csv_path, ":", line_no, ": ", why));
      };
      if (column[a] >= fields.size()) return bad("missing " + attrs[a].name);
      const std::string& f = fields[column[a]];
      if (!labels[a].empty()) {
        auto it = labels[a].find(f);
        if (it == labels[a].end()) {
          return bad("unknown " + attrs[a].name + " value '" + f + "'");
        }
        r[a] = it->second;
      } else if (!absl::SimpleAtoi(f, &r[a]) || r[a] < 0 ||
                 r[a] >= attrs[a].cardinality) {
        return bad(attrs[a].name + " value '" + f + "' out of range");
      }
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

std::string RecordsToCsv(const DomainSpec& domain,
                         std::span<const Record> records) {
  std::ostringstream out;
  for (int a = 0; a < domain.num_attributes(); ++a) {
    out << (a ? "," : "") << domain.attributes()[a].name;
  }
  out << "\n";
  for (const Record& r : records) {
    for (size_t a = 0; a < r.size(); ++a) out << (a ? "," : "") << r[a];
    out << "\n";
  }
  return out.str();
}

absl::Status WriteRecordsCsv(const std::string& path, const DomainSpec& domain,
                             std::span<const Record> records) {
  std::ofstream out(path);
  if (!out) return ConfigError("cannot write " + path);
  out << RecordsToCsv(domain, records);
  return out ? absl::OkStatus() : ConfigError("write failed for " + path);
}

}  // namespace dhdmm::workloads
