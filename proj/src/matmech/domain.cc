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

#include "dhdmm/matmech/domain.h"

#include <limits>
#include <numeric>
#include <set>

#include "absl/strings/str_cat.h"
#include "dhdmm/status.h"

namespace dhdmm::matmech {

// Largest flattened domain we are willing to materialize densely.
constexpr int64_t kMaxDomainSize = int64_t{1} << 24;

absl::StatusOr<DomainSpec> DomainSpec::Create(
    std::vector<Attribute> attributes) {
  if (attributes.empty()) {
    return MakeError(ErrorKind::kInvalidConfig, "domain has no attributes");
  }
  std::set<std::string> names;
  int64_t size = 1;
  for (const Attribute& attr : attributes) {
    if (attr.cardinality < 1) {
      return MakeError(ErrorKind::kInvalidConfig,
                       absl::StrCat("attribute '", attr.name,
                                    "' has cardinality ", attr.cardinality));
    }
    if (!names.insert(attr.name).second) {
      return MakeError(ErrorKind::kInvalidConfig,
                       absl::StrCat("duplicate attribute '", attr.name, "'"));
    }
    if (size > kMaxDomainSize / attr.cardinality) {
      return MakeError(ErrorKind::kInvalidConfig,
                       "flattened domain too large for a dense representation");
    }
    size *= attr.cardinality;
  }
  std::vector<int64_t> strides(attributes.size());
  int64_t stride = 1;
  for (size_t i = attributes.size(); i-- > 0;) {
    strides[i] = stride;
    stride *= attributes[i].cardinality;
  }
  return DomainSpec(std::move(attributes), std::move(strides), size);
}

std::optional<int> DomainSpec::AttributeIndex(std::string_view name) const {
  for (size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

bool DomainSpec::IsValid(std::span<const int32_t> tuple) const {
  if (tuple.size() != attributes_.size()) return false;
  for (size_t i = 0; i < tuple.size(); ++i) {
    if (tuple[i] < 0 || tuple[i] >= attributes_[i].cardinality) return false;
  }
  return true;
}

int64_t DomainSpec::Flatten(std::span<const int32_t> tuple) const {
  int64_t index = 0;
  for (size_t i = 0; i < tuple.size(); ++i) index += tuple[i] * strides_[i];
  return index;
}

Record DomainSpec::Unflatten(int64_t index) const {
  Record tuple(attributes_.size());
  for (size_t i = 0; i < attributes_.size(); ++i) {
    tuple[i] = static_cast<int32_t>(index / strides_[i]);
    index %= strides_[i];
  }
  return tuple;
}

bool DomainSpec::operator==(const DomainSpec& other) const {
  if (attributes_.size() != other.attributes_.size()) return false;
  for (size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name != other.attributes_[i].name ||
        attributes_[i].cardinality != other.attributes_[i].cardinality) {
      return false;
    }
  }
  return true;
}

int64_t HistogramVector::total() const {
  return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

absl::StatusOr<HistogramVector> Vectorize(std::span<const Record> records,
                                          const DomainSpec& domain) {
  HistogramVector x;
  x.counts.assign(domain.size(), 0);
  for (size_t r = 0; r < records.size(); ++r) {
    if (!domain.IsValid(records[r])) {
      return MakeError(ErrorKind::kInvalidRecord,
                       absl::StrCat("record ", r,
                                    " has an attribute index outside its "
                                    "domain or the wrong arity"));
    }
    ++x.counts[domain.Flatten(records[r])];
  }
  return x;
}

}  // namespace dhdmm::matmech
