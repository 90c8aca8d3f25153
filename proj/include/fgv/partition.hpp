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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fgv/graph.hpp"

namespace fgv {

struct CommunityLabeling {
  std::vector<std::uint32_t> community;  ///< dense ids 0..num_communities-1
  std::uint32_t num_communities = 0;
  double modularity = 0.0;
  /// Modularity after each aggregation level; non-decreasing.
  std::vector<double> level_modularity;
};

struct LouvainOptions {
  double resolution = 1.0;
  std::uint64_t seed = 42;
  std::size_t max_levels = 64;
  /// A local-moving sweep stops once its total modularity gain drops below this.
  double min_gain = 1e-9;
};

/// Louvain modularity optimisation on the undirected projection of `graph`
/// (each directed edge adds weight 1 to its unordered pair). Node visit
/// order is a seeded shuffle, so results are deterministic per seed.
CommunityLabeling louvain(const TransactionGraph& graph, const LouvainOptions& options);
inline CommunityLabeling louvain(const TransactionGraph& graph, std::uint64_t seed) {
  LouvainOptions options;
  options.seed = seed;
  return louvain(graph, options);
}

/// Newman modularity of `community` on the undirected projection.
double modularity(const TransactionGraph& graph, std::span<const std::uint32_t> community,
                  double resolution = 1.0);

/// Node-to-silo assignment with the derived boundary sets and cross edges.
class SiloPartition {
 public:
  SiloPartition() = default;
  /// Throws InvalidArgument if `assignment` does not cover every node or a
  /// silo id is >= num_silos.
  SiloPartition(const TransactionGraph& graph, std::vector<SiloId> assignment, std::size_t num_silos);

  std::size_t num_silos() const { return num_silos_; }
  std::span<const SiloId> assignment() const { return assignment_; }
  SiloId silo_of(NodeId v) const { return assignment_[v]; }

  /// Sorted node ids of silo k.
  std::span<const NodeId> nodes(SiloId k) const { return nodes_[k]; }
  /// Sorted ids of B_k: silo-k nodes with an edge (either direction) into another silo.
  std::span<const NodeId> boundary(SiloId k) const { return boundary_[k]; }
  /// Directed edges whose endpoints lie in different silos, in edge-list order.
  std::span<const Edge> cross_edges() const { return cross_edges_; }
  std::vector<std::size_t> silo_sizes() const;

 private:
  std::size_t num_silos_ = 0;
  std::vector<SiloId> assignment_;
  std::vector<std::vector<NodeId>> nodes_;
  std::vector<std::vector<NodeId>> boundary_;
  std::vector<Edge> cross_edges_;
};

/// Greedily packs whole communities into `num_silos` silos: largest
/// community first (ties by community id), each into the currently smallest
/// silo (ties by silo id).
SiloPartition communities_to_silos(const TransactionGraph& graph, const CommunityLabeling& labeling,
                                   std::size_t num_silos);

struct EdgeCutOptions {
  std::uint64_t seed = 42;
  double imbalance = 0.10;  ///< silo sizes within +-10% of n / K
  std::size_t max_refinement_passes = 32;
};

/// Greedy balanced edge-cut partitioner: farthest-point BFS seeds, region
/// growing (smallest region first), then boundary refinement passes that
/// move nodes with positive cut gain while respecting the balance window.
SiloPartition balanced_edgecut(const TransactionGraph& graph, std::size_t num_silos,
                               const EdgeCutOptions& options);
inline SiloPartition balanced_edgecut(const TransactionGraph& graph, std::size_t num_silos,
                                      std::uint64_t seed) {
  EdgeCutOptions options;
  options.seed = seed;
  return balanced_edgecut(graph, num_silos, options);
}

/// Number of directed edges whose endpoints lie in different silos.
std::size_t edge_cut(const TransactionGraph& graph, std::span<const SiloId> assignment);

/// |cross edges| / |E|; 0 for an edgeless graph.
double cross_edge_fraction(const SiloPartition& partition, const TransactionGraph& graph);

/// Text format: one line per node, `node_id<TAB>silo_id`, node ids being
/// internal 0-based indices. Reading requires every node exactly once.
void write_partition_file(const std::filesystem::path& path, const SiloPartition& partition);
SiloPartition read_partition_file(const std::filesystem::path& path, const TransactionGraph& graph,
                                  std::size_t num_silos = 0);

}  // namespace fgv
