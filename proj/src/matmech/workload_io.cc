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

#include "dhdmm/matmech/workload_io.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "absl/strings/str_cat.h"
#include "dhdmm/status.h"

namespace dhdmm::matmech {

using nlohmann::json;

absl::StatusOr<Matrix> MarginalRows(const DomainSpec& domain,
                                    std::span<const int> attrs) {
  std::vector<int> sorted(attrs.begin(), attrs.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    return MakeError(ErrorKind::kInvalidConfig,
                     "marginal lists an attribute twice");
  }
  int64_t cells = 1;
  for (int a : sorted) {
    if (a < 0 || a >= domain.num_attributes()) {
      return MakeError(ErrorKind::kInvalidConfig,
                       absl::StrCat("marginal attribute index ", a,
                                    " out of range"));
    }
    cells *= domain.attributes()[a].cardinality;
  }
  Matrix rows = Matrix::Zero(cells, domain.size());
  for (int64_t col = 0; col < domain.size(); ++col) {
    Record tuple = domain.Unflatten(col);
    int64_t row = 0;
    for (int a : sorted) {
      row = row * domain.attributes()[a].cardinality + tuple[a];
    }
    rows(row, col) = 1.0;
  }
  return rows;
}

absl::StatusOr<DomainSpec> DomainFromJson(const json& doc) {
  if (!doc.is_object() || !doc.contains("attributes") ||
      !doc["attributes"].is_array()) {
    return MakeError(ErrorKind::kInvalidConfig,
                     "expected an object with an \"attributes\" array");
  }
  std::vector<Attribute> attributes;
  for (const json& a : doc["attributes"]) {
    if (!a.contains("name") || !a["name"].is_string() ||
        !a.contains("cardinality") || !a["cardinality"].is_number_integer()) {
      return MakeError(ErrorKind::kInvalidConfig,
                       "attribute needs a string name and integer cardinality");
    }
    attributes.push_back(
        {a["name"].get<std::string>(), a["cardinality"].get<int64_t>()});
  }
  return DomainSpec::Create(std::move(attributes));
}

absl::StatusOr<Workload> WorkloadFromJson(const json& doc) {
  DHDMM_ASSIGN_OR_RETURN(DomainSpec domain, DomainFromJson(doc));
  if (!doc.contains("queries") || !doc["queries"].is_array()) {
    return MakeError(ErrorKind::kInvalidConfig, "missing \"queries\" array");
  }
  std::vector<Matrix> blocks;
  for (const json& q : doc["queries"]) {
    std::string kind = q.value("kind", "");
    if (kind == "marginal") {
      std::vector<int> attrs;
      for (const json& name : q.value("attrs", json::array())) {
        if (!name.is_string()) {
          return MakeError(ErrorKind::kInvalidConfig,
                           "marginal attrs must be attribute names");
        }
        std::optional<int> index =
            domain.AttributeIndex(name.get<std::string>());
        if (!index.has_value()) {
          return MakeError(ErrorKind::kInvalidConfig,
                           absl::StrCat("unknown attribute '",
                                        name.get<std::string>(), "'"));
        }
        attrs.push_back(*index);
      }
      DHDMM_ASSIGN_OR_RETURN(Matrix rows, MarginalRows(domain, attrs));
      blocks.push_back(std::move(rows));
    } else if (kind == "total") {
      blocks.push_back(Matrix::Ones(1, domain.size()));
    } else if (kind == "identity") {
      blocks.push_back(Matrix::Identity(domain.size(), domain.size()));
    } else if (kind == "dense") {
      const json& rows = q.value("rows", json::array());
      Matrix block(static_cast<Eigen::Index>(rows.size()), domain.size());
      for (size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array() ||
            static_cast<int64_t>(rows[r].size()) != domain.size()) {
          return MakeError(ErrorKind::kDimensionError,
                           absl::StrCat("dense row ", r, " must have ",
                                        domain.size(), " entries"));
        }
        for (int64_t c = 0; c < domain.size(); ++c) {
          if (!rows[r][c].is_number()) {
            return MakeError(ErrorKind::kInvalidConfig,
                             "dense rows must contain numbers");
          }
          block(r, c) = rows[r][c].get<double>();
        }
      }
      blocks.push_back(std::move(block));
    } else {
      return MakeError(ErrorKind::kInvalidConfig,
                       absl::StrCat("unknown query kind '", kind, "'"));
    }
  }
  Eigen::Index total_rows = 0;
  for (const Matrix& b : blocks) total_rows += b.rows();
  Matrix w(total_rows, domain.size());
  Eigen::Index at = 0;
  for (const Matrix& b : blocks) {
    w.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return Workload::Create(std::move(w), std::move(domain));
}

absl::StatusOr<Workload> LoadWorkloadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat("cannot open workload file ", path));
  }
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat(path, " is not valid JSON"));
  }
  return WorkloadFromJson(doc);
}

json DomainToJson(const DomainSpec& domain) {
  json attrs = json::array();
  for (const Attribute& a : domain.attributes()) {
    attrs.push_back({{"name", a.name}, {"cardinality", a.cardinality}});
  }
  return json{{"attributes", attrs}};
}

json WorkloadToJson(const Workload& workload) {
  json doc = DomainToJson(workload.domain());
  json rows = json::array();
  const Matrix& w = workload.matrix();
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
    rows.push_back(std::move(row));
  }
  doc["queries"] = json::array({json{{"kind", "dense"}, {"rows", rows}}});
  return doc;
}

}  // namespace dhdmm::matmech
