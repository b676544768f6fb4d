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

#ifndef DHDMM_MATMECH_DOMAIN_H_
#define DHDMM_MATMECH_DOMAIN_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"

namespace dhdmm::matmech {

struct Attribute {
  std::string name;
  int64_t cardinality = 1;
};

// One value index per attribute, in attribute order.
using Record = std::vector<int32_t>;

// Ordered product of finite attribute domains. Tuples flatten row-major over
// the attribute order: the last attribute varies fastest.
class DomainSpec {
 public:
  static absl::StatusOr<DomainSpec> Create(std::vector<Attribute> attributes);

  const std::vector<Attribute>& attributes() const { return attributes_; }
  int num_attributes() const { return static_cast<int>(attributes_.size()); }
  int64_t size() const { return size_; }

  std::optional<int> AttributeIndex(std::string_view name) const;

  bool IsValid(std::span<const int32_t> tuple) const;
  // Caller guarantees IsValid(tuple).
  int64_t Flatten(std::span<const int32_t> tuple) const;
  Record Unflatten(int64_t index) const;

  bool operator==(const DomainSpec& other) const;

 private:
  DomainSpec(std::vector<Attribute> attributes, std::vector<int64_t> strides,
             int64_t size)
      : attributes_(std::move(attributes)),
        strides_(std::move(strides)),
        size_(size) {}

  std::vector<Attribute> attributes_;
  std::vector<int64_t> strides_;
  int64_t size_;
};

// Per-tuple counts over the flattened domain.
struct HistogramVector {
  std::vector<int64_t> counts;
  int64_t total() const;
};

absl::StatusOr<HistogramVector> Vectorize(std::span<const Record> records,
                                          const DomainSpec& domain);

}  // namespace dhdmm::matmech

#endif  // DHDMM_MATMECH_DOMAIN_H_
