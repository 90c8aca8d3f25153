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

#include <algorithm>
#include <numeric>
#include <random>

#include "fgv/error.hpp"
#include "fgv/partition.hpp"

namespace fgv {
namespace {

// Symmetric weighted adjacency. A self loop of weight w on node i is stored
// once with weight w and counts w toward k_i, matching A_ii in the
// modularity sum.
struct WeightedGraph {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> targets;
  std::vector<double> weights;
  std::vector<double> degree;  // k_i = sum_j A_ij
  double total = 0.0;          // 2m = sum_i k_i

  std::size_t size() const { return degree.size(); }
};

WeightedGraph from_transaction_graph(const TransactionGraph& graph) {
  const std::size_t n = graph.num_nodes();
  // Undirected projection, parallel edges merged into weights.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(n);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : graph.out_neighbors(u)) {
      if (u == v) {
        adj[u].push_back({v, 2.0});
      } else {
        adj[u].push_back({v, 1.0});
        adj[v].push_back({u, 1.0});
      }
    }
  }
  WeightedGraph wg;
  wg.offsets.assign(n + 1, 0);
  wg.degree.assign(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    auto& row = adj[u];
    std::sort(row.begin(), row.end());
    std::size_t w = 0;
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (w > 0 && row[w - 1].first == row[r].first) {
        row[w - 1].second += row[r].second;
      } else {
        row[w++] = row[r];
      }
    }
    row.resize(w);
    wg.offsets[u + 1] = wg.offsets[u] + row.size();
    for (const auto& [v, weight] : row) {
      wg.targets.push_back(v);
      wg.weights.push_back(weight);
      wg.degree[u] += weight;
    }
  }
  wg.total = std::accumulate(wg.degree.begin(), wg.degree.end(), 0.0);
  return wg;
}

double labeling_modularity(const WeightedGraph& g, std::span<const std::uint32_t> comm,
                           std::size_t num_comm, double resolution) {
  if (g.total == 0.0) return 0.0;
  std::vector<double> internal(num_comm, 0.0);
  std::vector<double> tot(num_comm, 0.0);
  for (std::size_t u = 0; u < g.size(); ++u) {
    tot[comm[u]] += g.degree[u];
    for (std::size_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
      if (comm[g.targets[e]] == comm[u]) internal[comm[u]] += g.weights[e];
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < num_comm; ++c) {
    q += internal[c] / g.total - resolution * (tot[c] / g.total) * (tot[c] / g.total);
  }
  return q;
}

// One level of local moving. Returns true if any node changed community.
bool local_moving(const WeightedGraph& g, std::vector<std::uint32_t>& comm, double resolution,
                  double min_gain, std::mt19937_64& rng) {
  const std::size_t n = g.size();
  std::vector<double> tot(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) tot[comm[u]] += g.degree[u];

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> link(n, 0.0);
  std::vector<std::uint32_t> touched;
  bool any_move = false;
  while (true) {
    double sweep_gain = 0.0;
    std::size_t moves = 0;
    for (std::uint32_t u : order) {
      const std::uint32_t current = comm[u];
      const double ku = g.degree[u];
      touched.clear();
      for (std::size_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
        const std::uint32_t v = g.targets[e];
        if (v == u) continue;
        const std::uint32_t c = comm[v];
        if (link[c] == 0.0) touched.push_back(c);
        link[c] += g.weights[e];
      }
      tot[current] -= ku;
      const double scale = resolution * ku / g.total;
      const double stay = link[current] - scale * tot[current];
      std::uint32_t best = current;
      double best_score = stay;
      for (std::uint32_t c : touched) {
        const double score = link[c] - scale * tot[c];
        if (score > best_score || (score == best_score && c < best && best != current)) {
          best = c;
          best_score = score;
        }
      }
      tot[best] += ku;
      if (best != current) {
        comm[u] = best;
        sweep_gain += 2.0 * (best_score - stay) / g.total;
        ++moves;
      }
      for (std::uint32_t c : touched) link[c] = 0.0;
      link[current] = 0.0;
    }
    if (moves > 0) any_move = true;
    if (moves == 0 || sweep_gain < min_gain) break;
  }
  return any_move;
}

// Relabels to dense ids in order of first appearance.
std::size_t compact(std::vector<std::uint32_t>& comm) {
  std::vector<std::uint32_t> remap(comm.size(), ~0u);
  std::uint32_t next = 0;
  for (auto& c : comm) {
    if (remap[c] == ~0u) remap[c] = next++;
    c = remap[c];
  }
  return next;
}

WeightedGraph aggregate(const WeightedGraph& g, std::span<const std::uint32_t> comm, std::size_t num_comm) {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(num_comm);
  for (std::size_t u = 0; u < g.size(); ++u) {
    for (std::size_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
      adj[comm[u]].push_back({comm[g.targets[e]], g.weights[e]});
    }
  }
  WeightedGraph out;
  out.offsets.assign(num_comm + 1, 0);
  out.degree.assign(num_comm, 0.0);
  for (std::size_t c = 0; c < num_comm; ++c) {
    auto& row = adj[c];
    std::sort(row.begin(), row.end());
    std::size_t w = 0;
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (w > 0 && row[w - 1].first == row[r].first) {
        row[w - 1].second += row[r].second;
      } else {
        row[w++] = row[r];
      }
    }
    row.resize(w);
    out.offsets[c + 1] = out.offsets[c] + row.size();
    for (const auto& [d, weight] : row) {
      out.targets.push_back(d);
      out.weights.push_back(weight);
      out.degree[c] += weight;
    }
  }
  out.total = g.total;
  return out;
}

}  // namespace

double modularity(const TransactionGraph& graph, std::span<const std::uint32_t> community, double resolution) {
  if (community.size() != graph.num_nodes()) throw InvalidArgument("modularity: labeling size mismatch");
  const WeightedGraph g = from_transaction_graph(graph);
  const std::uint32_t max_id = community.empty() ? 0 : *std::max_element(community.begin(), community.end());
  return labeling_modularity(g, community, static_cast<std::size_t>(max_id) + 1, resolution);
}

CommunityLabeling louvain(const TransactionGraph& graph, const LouvainOptions& options) {
  if (graph.num_nodes() == 0) throw InvalidArgument("louvain: empty graph");
  std::mt19937_64 rng(options.seed);

  WeightedGraph level_graph = from_transaction_graph(graph);
  std::vector<std::uint32_t> node_comm(graph.num_nodes());
  std::iota(node_comm.begin(), node_comm.end(), 0u);

  CommunityLabeling result;
  std::size_t num_comm = graph.num_nodes();
  result.level_modularity.push_back(labeling_modularity(level_graph, node_comm, num_comm, options.resolution));

  for (std::size_t level = 0; level < options.max_levels && level_graph.total > 0.0; ++level) {
    std::vector<std::uint32_t> comm(level_graph.size());
    std::iota(comm.begin(), comm.end(), 0u);
    if (!local_moving(level_graph, comm, options.resolution, options.min_gain, rng)) break;
    num_comm = compact(comm);
    for (auto& c : node_comm) c = comm[c];
    level_graph = aggregate(level_graph, comm, num_comm);
    std::vector<std::uint32_t> identity(num_comm);
    std::iota(identity.begin(), identity.end(), 0u);
    result.level_modularity.push_back(
        labeling_modularity(level_graph, identity, num_comm, options.resolution));
    if (num_comm == 1) break;
  }
  result.num_communities = static_cast<std::uint32_t>(compact(node_comm));
  result.community = std::move(node_comm);
  result.modularity = result.level_modularity.back();
  return result;
}

}  // namespace fgv
