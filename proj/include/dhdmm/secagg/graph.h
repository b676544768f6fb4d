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

#ifndef DHDMM_SECAGG_GRAPH_H_
#define DHDMM_SECAGG_GRAPH_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"

namespace dhdmm::secagg {

struct NeighborGraph {
  std::vector<std::vector<uint32_t>> neighbors;  // sorted adjacency lists
  int64_t degree = 0;
  // Set when n * k was odd and the degree was moved by one.
  bool degree_adjusted = false;
  int attempts = 1;
};

// k-regular graph on n clients: a Harary graph H(k, n) under a seeded random
// relabelling. Requires 3 <= k < n, or k = n - 1 for n <= 3. When n * k is
// odd the degree is raised (or lowered, if it would reach n) by one.
absl::StatusOr<NeighborGraph> BuildGraph(int64_t n, int64_t k, uint64_t seed);

bool IsConnected(const NeighborGraph& g);

}  // namespace dhdmm::secagg

#endif  // DHDMM_SECAGG_GRAPH_H_
