// Copyright 2026 The fgvasp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Independent reference computations used to check library results.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "fgv/graph.hpp"

namespace fgv::testing {

inline double choose2(double n) { return n * (n - 1) / 2; }

/// Hubert-Arabie adjusted Rand index from the contingency table.
inline double adjusted_rand_index(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> table;
  std::map<std::uint32_t, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  double index = 0, sa = 0, sb = 0;
  for (const auto& [k, v] : table) index += choose2(v);
  for (const auto& [k, v] : ra) sa += choose2(v);
  for (const auto& [k, v] : rb) sb += choose2(v);
  const double expected = sa * sb / choose2(static_cast<double>(a.size()));
  const double max_index = (sa + sb) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

/// Newman modularity from a dense symmetric adjacency matrix; a directed
/// edge (u, v) adds one to A[u][v] and to A[v][u].
inline double dense_modularity(const TransactionGraph& g, const std::vector<std::uint32_t>& c) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (auto e : g.edge_list()) {
    a[e.src][e.dst] += 1;
    a[e.dst][e.src] += 1;
  }
  std::vector<double> k(n, 0.0);
  double two_m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j];
    two_m += k[i];
  }
  if (two_m == 0) return 0.0;
  double q = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (c[i] == c[j]) q += a[i][j] - k[i] * k[j] / two_m;
    }
  }
  return q / two_m;
}

struct BoundaryOracle {
  std::vector<std::vector<NodeId>> boundary;
  std::size_t cross = 0;
};

/// Scans every edge; v is a boundary node iff some incident edge crosses.
inline BoundaryOracle brute_force_boundaries(const TransactionGraph& g, const std::vector<SiloId>& assign,
                                             std::size_t k) {
  BoundaryOracle out;
  std::vector<std::set<NodeId>> sets(k);
  for (auto e : g.edge_list()) {
    if (assign[e.src] != assign[e.dst]) {
      ++out.cross;
      sets[assign[e.src]].insert(e.src);
      sets[assign[e.dst]].insert(e.dst);
    }
  }
  for (auto& s : sets) out.boundary.emplace_back(s.begin(), s.end());
  return out;
}

/// Normwise relative error |a - b| / max(|a|, |b|, floor).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-8) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

/// Central differences of f over every entry of `params`.
template <class F>
std::vector<double> numeric_gradient(std::vector<double> params, F&& f, double step = 1e-4) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + step;
    const double up = f(params);
    params[i] = orig - step;
    const double down = f(params);
    params[i] = orig;
    g[i] = (up - down) / (2 * step);
  }
  return g;
}

}  // namespace fgv::testing
