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
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace fgv {

using NodeId = std::uint32_t;
using SiloId = std::uint16_t;

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FeatureMatrix = Matrix<float>;

enum class Label : std::int8_t { kUnknown = -1, kLicit = 0, kIllicit = 1 };

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Compressed sparse rows over node ids. Row v lists the targets of v in
/// insertion order (stable counting sort), duplicates kept.
class Csr {
 public:
  Csr() = default;

  /// Builds rows keyed by `src`; with `transpose` the rows are keyed by `dst`.
  static Csr from_edges(std::size_t num_nodes, std::span<const Edge> edges, bool transpose);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_entries() const { return targets_.size(); }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::span<const NodeId> row(NodeId v) const {
    return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const NodeId> targets() const { return targets_; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
};

struct LabelCounts {
  std::size_t illicit = 0;
  std::size_t licit = 0;
  std::size_t unknown = 0;
};

/// Directed transaction graph with per-node features and tri-state labels.
/// Immutable after construction.
class TransactionGraph {
 public:
  TransactionGraph() = default;

  /// Throws InvalidArgument when an edge endpoint, the feature row count or
  /// the label/time vectors disagree with `num_nodes`. `time_steps` and
  /// `external_ids` may be empty.
  TransactionGraph(std::size_t num_nodes, std::span<const Edge> edges, FeatureMatrix features,
                   std::vector<Label> labels, std::vector<std::int32_t> time_steps = {},
                   std::vector<std::uint64_t> external_ids = {});

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return out_.num_entries(); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(features_.cols()); }

  std::span<const NodeId> out_neighbors(NodeId v) const { return out_.row(v); }
  std::span<const NodeId> in_neighbors(NodeId v) const { return in_.row(v); }
  const Csr& out_csr() const { return out_; }
  const Csr& in_csr() const { return in_; }

  /// Edge list rebuilt from the out-CSR, grouped by source.
  std::vector<Edge> edge_list() const;

  const FeatureMatrix& features() const { return features_; }
  std::span<const Label> labels() const { return labels_; }
  Label label(NodeId v) const { return labels_[v]; }
  bool has_time_steps() const { return !time_steps_.empty(); }
  std::span<const std::int32_t> time_steps() const { return time_steps_; }
  std::span<const std::uint64_t> external_ids() const { return external_ids_; }
  LabelCounts label_counts() const;

  /// Same topology, labels and ids with a replaced feature matrix.
  TransactionGraph with_features(FeatureMatrix features) const;
  TransactionGraph with_labels(std::vector<Label> labels) const;

 private:
  std::size_t num_nodes_ = 0;
  Csr out_;
  Csr in_;
  FeatureMatrix features_;
  std::vector<Label> labels_;
  std::vector<std::int32_t> time_steps_;
  std::vector<std::uint64_t> external_ids_;
};

/// Induced subgraph with a local numbering. `global_ids[local]` maps back.
struct Subgraph {
  TransactionGraph graph;
  std::vector<NodeId> global_ids;

  /// Local index of `global`, or -1 when the node is not in the subgraph.
  std::int64_t local_of(NodeId global) const;
};

/// Keeps the nodes in `nodes` (sorted ascending, no duplicates) and every
/// edge with both endpoints among them.
Subgraph induced_subgraph(const TransactionGraph& graph, std::span<const NodeId> nodes);

// ---------------------------------------------------------------------------
// Ingestion

struct EllipticPaths {
  std::filesystem::path features;
  std::filesystem::path classes;
  std::filesystem::path edgelist;

  /// The three file names of the public distribution under `dir`.
  static EllipticPaths in_directory(const std::filesystem::path& dir);
};

/// Reads the Elliptic CSV layout. Node order follows the features file; the
/// txId and time-step columns are dropped from the learned feature matrix
/// and the time step is kept per node. Header rows are detected by a
/// non-numeric first field.
TransactionGraph load_elliptic(const EllipticPaths& paths);

/// Generic labelled table (e.g. the Ethereum fraud CSV): header row
/// required; `label_column` holds 0/1 (1 = illicit); non-numeric columns
/// and the names in `drop_columns` are skipped; empty cells read as 0.
struct LabeledTable {
  FeatureMatrix features;
  std::vector<Label> labels;
  std::vector<std::string> feature_names;
};
LabeledTable load_labeled_table(const std::filesystem::path& path, const std::string& label_column,
                                std::span<const std::string> drop_columns);

enum class DistanceMetric { kEuclidean };

/// Each node gets exactly k out-edges to its nearest neighbours (self
/// excluded). Distance ties go to the smaller node id. Brute force.
TransactionGraph build_knn_graph(const FeatureMatrix& features, std::size_t k,
                                 DistanceMetric metric = DistanceMetric::kEuclidean,
                                 std::vector<Label> labels = {});

struct SyntheticSpec {
  std::size_t num_communities = 3;
  std::size_t nodes_per_community = 100;
  double p_intra = 0.1;
  double p_inter = 0.005;
  std::size_t feature_dim = 16;
  double illicit_fraction = 0.1;
  std::uint64_t seed = 42;
  /// Mean shift added to the first half of the feature columns of illicit nodes.
  double illicit_shift = 1.0;
  /// Per-community mean offset scale, so communities are distinguishable.
  double community_shift = 0.5;
};

struct SyntheticGraph {
  TransactionGraph graph;
  std::vector<std::uint32_t> community;  ///< planted block of every node
};

/// Stochastic block model: each unordered pair is linked with p_intra inside
/// a block and p_inter across blocks, oriented by a fair coin. Illicit
/// labels are planted in the even-numbered communities only.
SyntheticGraph generate_synthetic(const SyntheticSpec& spec);

/// Text serialisation for graphs produced by the generator; see README.
void write_graph_text(const std::filesystem::path& path, const TransactionGraph& graph);
TransactionGraph read_graph_text(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Splits

enum class NodeRole : std::uint8_t { kExcluded = 0, kTrain = 1, kTest = 2 };

struct TemporalSplit {
  std::int32_t last_train_step = 34;
};

struct RandomSplit {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
};

using SplitRule = std::variant<TemporalSplit, RandomSplit>;

struct NodeMask {
  std::vector<NodeRole> roles;
  std::string derivation;  ///< e.g. "temporal:last_train_step=34"

  std::vector<NodeId> nodes_with(NodeRole role) const;
  std::size_t count(NodeRole role) const;
};

/// Unknown-label nodes are always excluded. Throws DataError when no node
/// is labelled or a temporal rule meets a graph without time steps.
NodeMask make_split(const TransactionGraph& graph, const SplitRule& rule);

/// Column z-score using statistics of the training nodes only. Columns with
/// zero training variance are centred but not scaled.
FeatureMatrix zscore_normalize(const FeatureMatrix& features, const NodeMask& mask);

}  // namespace fgv
