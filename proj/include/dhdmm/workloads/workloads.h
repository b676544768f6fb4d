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

#ifndef DHDMM_WORKLOADS_WORKLOADS_H_
#define DHDMM_WORKLOADS_WORKLOADS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dhdmm/matmech/domain.h"
#include "dhdmm/matmech/mechanism.h"

namespace dhdmm::workloads {

using matmech::DomainSpec;
using matmech::Record;
using matmech::Workload;

// All k-way marginals: one 0/1 row per (attribute subset of size k, value
// combination). Subsets are enumerated in lexicographic order of attribute
// index. k = 0 gives the total query.
absl::StatusOr<Workload> BuildMarginals(const DomainSpec& domain, int k);
absl::StatusOr<Workload> BuildIdentity(const DomainSpec& domain);
absl::StatusOr<Workload> BuildTotal(const DomainSpec& domain);

// Census-shaped demographic domain:
//   sex 2, hispanic 2, race 4, relationship 2, age 8 * scale.
// The domain has 256 * scale cells.
absl::StatusOr<DomainSpec> Sf1Domain(int scale);

// Synthetic workload over Sf1Domain(scale): the total, every 1-way marginal,
// the 2-way marginals of age with each other attribute plus race x hispanic
// and sex x race, prefix ranges on age split by sex, and 24 * scale random
// conjunctive predicate counts drawn from a generator seeded by `scale`.
absl::StatusOr<Workload> BuildSf1Shaped(int scale);

// Adult-style domain, 256 cells:
//   age 4 (<30, 30-44, 45-59, 60+), education 4 (<HS, HS, some college,
//   degree), hours_per_week 4 (<30, 30-39, 40-49, 50+), sex 2, income 2
//   (<=50K, >50K).
DomainSpec AdultDomain();

// Draws `count` records from a seeded latent-class model over `domain`:
// four mixture components, each with its own skewed categorical
// distribution per attribute, so attributes are correlated.
std::vector<Record> SyntheticRecords(const DomainSpec& domain, int64_t count,
                                     uint64_t seed);

// Assigns every record to a client drawn uniformly from [0, n).
std::vector<std::vector<Record>> Partition(std::span<const Record> records,
                                           int64_t n, uint64_t seed);

// Benchmark workload selector, as written on the command line:
//   "marginals:K"  all K-way marginals over AdultDomain()
//   "identity"     identity over AdultDomain()
//   "total"        total over AdultDomain()
//   "sf1:S"        BuildSf1Shaped(S)
//   "file:PATH"    workload JSON document
struct WorkloadSpec {
  enum class Kind { kMarginals, kIdentity, kTotal, kSf1Shaped, kCustom };
  Kind kind = Kind::kMarginals;
  int k = 2;
  int scale = 1;
  std::string path;
};

absl::StatusOr<WorkloadSpec> ParseWorkloadSpec(std::string_view text);
absl::StatusOr<Workload> BuildWorkload(const WorkloadSpec& spec);

// Reads records from a CSV file whose header names the columns. `mapping`
// is a JSON file listing the attributes in domain order:
//   {"attributes": [{"name": "sex", "values": ["F", "M"]},
//                   {"name": "age", "cardinality": 8}]}
// Attributes with "values" map labels to indices; the others take integer
// indices. Columns not named in the mapping are ignored.
struct CsvDataset {
  DomainSpec domain;
  std::vector<Record> records;
};
absl::StatusOr<CsvDataset> LoadRecordsCsv(const std::string& csv_path,
                                          const std::string& mapping_path);

// Header of attribute names followed by one row of value indices per record.
std::string RecordsToCsv(const DomainSpec& domain,
                         std::span<const Record> records);
absl::Status WriteRecordsCsv(const std::string& path, const DomainSpec& domain,
                             std::span<const Record> records);

}  // namespace dhdmm::workloads

#endif  // DHDMM_WORKLOADS_WORKLOADS_H_
