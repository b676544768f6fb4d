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

#ifndef DHDMM_MATMECH_WORKLOAD_IO_H_
#define DHDMM_MATMECH_WORKLOAD_IO_H_

#include <span>
#include <string>

#include "absl/status/statusor.h"
#include "dhdmm/matmech/mechanism.h"
#include "json.hpp"

namespace dhdmm::matmech {

// Indicator rows for the marginal over `attrs` (attribute indices): one row
// per value combination, enumerated row-major in ascending attribute order.
// An empty attribute list yields the single all-ones total row.
absl::StatusOr<Matrix> MarginalRows(const DomainSpec& domain,
                                    std::span<const int> attrs);

// Document shape:
//   {"attributes": [{"name": "age", "cardinality": 8}, ...],
//    "queries": [{"kind": "marginal", "attrs": ["age", "sex"]},
//                {"kind": "total"}, {"kind": "identity"},
//                {"kind": "dense", "rows": [[...], ...]}]}
absl::StatusOr<DomainSpec> DomainFromJson(const nlohmann::json& doc);
absl::StatusOr<Workload> WorkloadFromJson(const nlohmann::json& doc);
absl::StatusOr<Workload> LoadWorkloadFile(const std::string& path);

nlohmann::json DomainToJson(const DomainSpec& domain);
// Emits every query as a single "dense" block.
nlohmann::json WorkloadToJson(const Workload& workload);

}  // namespace dhdmm::matmech

#endif  // DHDMM_MATMECH_WORKLOAD_IO_H_
