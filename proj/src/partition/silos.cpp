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
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <fmt/format.h>
#include <fmt/os.h>

#include "../graph/csv.hpp"
#include "fgv/error.hpp"
#include "fgv/partition.hpp"

namespace fgv {

SiloPartition::SiloPartition(const TransactionGraph& graph, std::vector<SiloId> assignment,
                             std::size_t num_silos)
    : num_silos_(num_silos), assignment_(std::move(assignment)) {
  if (num_silos_ == 0) throw InvalidArgument("SiloPartition: need at least one silo");
  if (num_silos_ > std::numeric_limits<SiloId>::max()) throw InvalidArgument("SiloPartition: too many silos");
  if (assignment_.size() != graph.num_nodes()) {
    throw InvalidArgument("SiloPartition: assignment does not cover every node");
  }
  nodes_.resize(num_silos_);
  boundary_.resize(num_silos_);
  for (NodeId v = 0; v < assignment_.size(); ++v) {
    if (assignment_[v] >= num_silos_) {
      throw InvalidArgument(fmt::format("SiloPartition: node {} has silo {} >= {}", v, assignment_[v], num_silos_));
    }
    nodes_[assignment_[v]].push_back(v);
  }
  std::vector<char> is_boundary(graph.num_nodes(), 0);
  for (NodeId u = 0; u < graph.num_nodes(); ++u) {
    for (NodeId v : graph.out_neighbors(u)) {
      if (assignment_[u] != assignment_[v]) {
        cross_edges_.push_back({u, v});
        is_boundary[u] = 1;
        is_boundary[v] = 1;
      }
    }
  }
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    if (is_boundary[v]) boundary_[assignment_[v]].push_back(v);
  }
}

std::vector<std::size_t> SiloPartition::silo_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& n : nodes_) sizes.push_back(n.size());
  return sizes;
}

SiloPartition communities_to_silos(const TransactionGraph& graph, const CommunityLabeling& labeling,
                                   std::size_t num_silos) {
  if (num_silos == 0) throw InvalidArgument("communities_to_silos: K must be positive");
  if (labeling.community.size() != graph.num_nodes()) {
    throw InvalidArgument("communities_to_silos: labeling does not match the graph");
  }
  if (labeling.num_communities < num_silos) {
    throw InvalidArgument(fmt::format("communities_to_silos: {} communities cannot fill {} silos",
                                      labeling.num_communities, num_silos));
  }
  std::vector<std::size_t> size(labeling.num_communities, 0);
  for (auto c : labeling.community) ++size[c];
  std::vector<std::uint32_t> order(labeling.num_communities);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return size[a] > size[b]; });

  std::vector<std::size_t> load(num_silos, 0);
  std::vector<SiloId> silo_of_comm(labeling.num_communities, 0);
  for (auto c : order) {
    const auto target = static_cast<SiloId>(std::min_element(load.begin(), load.end()) - load.begin());
    silo_of_comm[c] = target;
    load[target] += size[c];
  }
  std::vector<SiloId> assignment(graph.num_nodes());
  for (NodeId v = 0; v < graph.num_nodes(); ++v) assignment[v] = silo_of_comm[labeling.community[v]];
  return SiloPartition(graph, std::move(assignment), num_silos);
}

std::size_t edge_cut(const TransactionGraph& graph, std::span<const SiloId> assignment) {
  std::size_t cut = 0;
  for (NodeId u = 0; u < graph.num_nodes(); ++u) {
    for (NodeId v : graph.out_neighbors(u)) cut += assignment[u] != assignment[v] ? 1 : 0;
  }
  return cut;
}

double cross_edge_fraction(const SiloPartition& partition, const TransactionGraph& graph) {
  if (graph.num_edges() == 0) return 0.0;
  return static_cast<double>(partition.cross_edges().size()) / static_cast<double>(graph.num_edges());
}

SiloPartition balanced_edgecut(const TransactionGraph& graph, std::size_t num_silos,
                               const EdgeCutOptions& options) {
  const std::size_t n = graph.num_nodes();
  if (num_silos < 2) throw InvalidArgument("balanced_edgecut: K must be at least 2");
  if (num_silos > n) throw InvalidArgument(fmt::format("balanced_edgecut: K={} exceeds {} nodes", num_silos, n));

  // Undirected neighbour lists (multi-edges kept, they weigh the cut).
  auto neighbors = [&](NodeId v, auto&& fn) {
    for (NodeId w : graph.out_neighbors(v)) {
      if (w != v) fn(w);
    }
    for (NodeId w : graph.in_neighbors(v)) {
      if (w != v) fn(w);
    }
  };

  std::mt19937_64 rng(options.seed);
  constexpr SiloId kUnassigned = std::numeric_limits<SiloId>::max();
  constexpr std::size_t kFar = std::numeric_limits<std::size_t>::max();

  // Farthest-point seeding; unreachable nodes count as infinitely far.
  std::vector<NodeId> seeds{static_cast<NodeId>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng))};
  std::vector<std::size_t> dist(n, kFar);
  std::deque<NodeId> queue;
  while (seeds.size() < num_silos) {
    std::fill(dist.begin(), dist.end(), kFar);
    for (NodeId s : seeds) {
      dist[s] = 0;
      queue.push_back(s);
    }
    while (!queue.empty()) {
      const NodeId v = queue.front();
      queue.pop_front();
      neighbors(v, [&](NodeId w) {
        if (dist[w] == kFar) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
      });
    }
    NodeId best = 0;
    for (NodeId v = 1; v < n; ++v) {
      if (dist[v] > dist[best]) best = v;
    }
    seeds.push_back(best);
  }

  std::vector<SiloId> part(n, kUnassigned);
  std::vector<std::size_t> size(num_silos, 0);
  std::vector<std::deque<NodeId>> frontier(num_silos);
  auto claim = [&](NodeId v, SiloId k) {
    part[v] = k;
    ++size[k];
    neighbors(v, [&](NodeId w) {
      if (part[w] == kUnassigned) frontier[k].push_back(w);
    });
  };
  for (std::size_t k = 0; k < num_silos; ++k) claim(seeds[k], static_cast<SiloId>(k));

  std::size_t assigned = num_silos;
  NodeId scan = 0;
  while (assigned < n) {
    const auto k = static_cast<SiloId>(std::min_element(size.begin(), size.end()) - size.begin());
    while (!frontier[k].empty() && part[frontier[k].front()] != kUnassigned) frontier[k].pop_front();
    NodeId next;
    if (!frontier[k].empty()) {
      next = frontier[k].front();
      frontier[k].pop_front();
    } else {
      // Region is enclosed: restart it from the lowest unassigned node.
      while (part[scan] != kUnassigned) ++scan;
      next = scan;
    }
    claim(next, k);
    ++assigned;
  }

  const double ideal = static_cast<double>(n) / static_cast<double>(num_silos);
  const auto min_size = static_cast<std::size_t>(std::floor((1.0 - options.imbalance) * ideal));
  const auto max_size = static_cast<std::size_t>(std::ceil((1.0 + options.imbalance) * ideal));

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::vector<long> conn(num_silos, 0);
  for (std::size_t pass = 0; pass < options.max_refinement_passes; ++pass) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t moves = 0;
    for (NodeId v : order) {
      std::fill(conn.begin(), conn.end(), 0);
      neighbors(v, [&](NodeId w) { ++conn[part[w]]; });
      const SiloId from = part[v];
      SiloId best = from;
      long best_gain = 0;
      for (std::size_t k = 0; k < num_silos; ++k) {
        if (k == from || size[k] + 1 > max_size) continue;
        const long gain = conn[k] - conn[from];
        // Zero-gain moves are taken only when they shrink an oversized silo.
        const bool balance_move = gain == 0 && size[from] > size[k] + 1;
        if (gain > best_gain || (best == from && balance_move)) {
          best = static_cast<SiloId>(k);
          best_gain = gain;
        }
      }
      if (best != from && size[from] - 1 >= min_size) {
        part[v] = best;
        --size[from];
        ++size[best];
        ++moves;
      }
    }
    if (moves == 0) break;
  }
  return SiloPartition(graph, std::move(part), num_silos);
}

void write_partition_file(const std::filesystem::path& path, const SiloPartition& partition) {
  auto out = fmt::output_file(path.string());
  const auto assignment = partition.assignment();
  for (std::size_t v = 0; v < assignment.size(); ++v) out.print("{}\t{}\n", v, assignment[v]);
}

SiloPartition read_partition_file(const std::filesystem::path& path, const TransactionGraph& graph,
                                  std::size_t num_silos) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open partition file " + path.string());
  csv::LineReader reader(in);
  const std::string src = path.filename().string();
  std::vector<std::string_view> fields;
  std::vector<std::string> scratch;
  std::string line;
  constexpr SiloId kUnset = std::numeric_limits<SiloId>::max();
  std::vector<SiloId> assignment(graph.num_nodes(), kUnset);
  std::size_t max_silo = 0;
  while (reader.next(line)) {
    if (csv::trim(line).empty()) continue;
    csv::split(line, '\t', fields, scratch);
    auto node = fields.size() == 2 ? csv::parse_number<NodeId>(fields[0]) : std::nullopt;
    auto silo = fields.size() == 2 ? csv::parse_number<std::size_t>(fields[1]) : std::nullopt;
    if (!node || !silo) throw ParseError(src, reader.line_no(), "expected 'node_id<TAB>silo_id'");
    if (*node >= graph.num_nodes()) throw ParseError(src, reader.line_no(), "node id out of range");
    if (*silo >= kUnset) throw ParseError(src, reader.line_no(), "silo id too large");
    if (assignment[*node] != kUnset) throw ParseError(src, reader.line_no(), "node listed twice");
    assignment[*node] = static_cast<SiloId>(*silo);
    max_silo = std::max(max_silo, *silo);
  }
  for (NodeId v = 0; v < assignment.size(); ++v) {
    if (assignment[v] == kUnset) throw DataError(fmt::format("{}: node {} has no silo", src, v));
  }
  if (num_silos == 0) num_silos = max_silo + 1;
  return SiloPartition(graph, std::move(assignment), num_silos);
}

}  // namespace fgv
