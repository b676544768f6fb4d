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

#include "dhdmm/secagg/graph.h"

#include <algorithm>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "dhdmm/random.h"
#include "dhdmm/status.h"

namespace dhdmm::secagg {

bool IsConnected(const NeighborGraph& g) {
  const size_t n = g.neighbors.size();
  if (n == 0) return true;
  std::vector<bool> seen(n, false);
  std::vector<uint32_t> stack = {0};
  seen[0] = true;
  size_t count = 1;
  while (!stack.empty()) {
    uint32_t v = stack.back();
    stack.pop_back();
    for (uint32_t w : g.neighbors[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

absl::StatusOr<NeighborGraph> BuildGraph(int64_t n, int64_t k, uint64_t seed) {
  if (n < 1) return MakeError(ErrorKind::kInvalidConfig, "need at least one client");
  bool complete = k == n - 1;
  if (k >= n || k < 0 || (k < 3 && !complete)) {
    return MakeError(ErrorKind::kInvalidConfig,
                     absl::StrCat("degree ", k, " invalid for ", n, " clients"));
  }
  NeighborGraph g;
  if ((n * k) % 2 == 1) {
    k = k + 1 < n ? k + 1 : k - 1;
    g.degree_adjusted = true;
  }
  g.degree = k;
  Rng base(seed);
  for (int attempt = 0; attempt < 16; ++attempt) {
    Rng rng = base.Derive("secagg.graph", attempt);
    std::vector<uint32_t> label(n);
    std::iota(label.begin(), label.end(), 0);
    std::shuffle(label.begin(), label.end(), rng);
    g.neighbors.assign(n, {});
    auto link = [&](int64_t a, int64_t b) {
      g.neighbors[label[a]].push_back(label[b]);
      g.neighbors[label[b]].push_back(label[a]);
    };
    for (int64_t pos = 0; pos < n; ++pos) {
      for (int64_t off = 1; off <= k / 2; ++off) link(pos, (pos + off) % n);
      if (k % 2 == 1 && pos < n / 2) link(pos, pos + n / 2);
    }
    for (auto& adj : g.neighbors) std::sort(adj.begin(), adj.end());
    g.attempts = attempt + 1;
    if (IsConnected(g)) return g;
  }
  return MakeError(ErrorKind::kInvalidConfig, "could not build a connected graph");
}

}  // namespace dhdmm::secagg
