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

#include "fgv/graph.hpp"

#include <algorithm>
#include <string>

#include "fgv/error.hpp"

namespace fgv {

Csr Csr::from_edges(std::size_t num_nodes, std::span<const Edge> edges, bool transpose) {
  Csr csr;
  csr.offsets_.assign(num_nodes + 1, 0);
  for (const Edge& e : edges) {
    ++csr.offsets_[(transpose ? e.dst : e.src) + 1];
  }
  for (std::size_t v = 0; v < num_nodes; ++v) {
    csr.offsets_[v + 1] += csr.offsets_[v];
  }
  csr.targets_.resize(edges.size());
  std::vector<std::size_t> cursor(csr.offsets_.begin(), csr.offsets_.end() - 1);
  for (const Edge& e : edges) {
    const NodeId key = transpose ? e.dst : e.src;
    csr.targets_[cursor[key]++] = transpose ? e.src : e.dst;
  }
  return csr;
}

TransactionGraph::TransactionGraph(std::size_t num_nodes, std::span<const Edge> edges,
                                   FeatureMatrix features, std::vector<Label> labels,
                                   std::vector<std::int32_t> time_steps,
                                   std::vector<std::uint64_t> external_ids)
    : num_nodes_(num_nodes),
      features_(std::move(features)),
      labels_(std::move(labels)),
      time_steps_(std::move(time_steps)),
      external_ids_(std::move(external_ids)) {
  if (static_cast<std::size_t>(features_.rows()) != num_nodes) {
    throw InvalidArgument("feature matrix has " + std::to_string(features_.rows()) +
                          " rows for " + std::to_string(num_nodes) + " nodes");
  }
  if (labels_.size() != num_nodes) {
    throw InvalidArgument("label vector length does not match node count");
  }
  if (!time_steps_.empty() && time_steps_.size() != num_nodes) {
    throw InvalidArgument("time-step vector length does not match node count");
  }
  if (!external_ids_.empty() && external_ids_.size() != num_nodes) {
    throw InvalidArgument("external id vector length does not match node count");
  }
  for (const Edge& e : edges) {
    if (e.src >= num_nodes || e.dst >= num_nodes) {
      throw InvalidArgument("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                            ") has an endpoint outside [0, " + std::to_string(num_nodes) + ")");
    }
  }
  out_ = Csr::from_edges(num_nodes, edges, false);
  in_ = Csr::from_edges(num_nodes, edges, true);
}

std::vector<Edge> TransactionGraph::edge_list() const {
  std::vector<Edge> edges;
  edges.reserve(num_edges());
  for (NodeId v = 0; v < num_nodes_; ++v) {
    for (NodeId w : out_.row(v)) edges.push_back({v, w});
  }
  return edges;
}

LabelCounts TransactionGraph::label_counts() const {
  LabelCounts counts;
  for (Label l : labels_) {
    switch (l) {
      case Label::kIllicit: ++counts.illicit; break;
      case Label::kLicit: ++counts.licit; break;
      case Label::kUnknown: ++counts.unknown; break;
    }
  }
  return counts;
}

TransactionGraph TransactionGraph::with_features(FeatureMatrix features) const {
  const auto edges = edge_list();
  return TransactionGraph(num_nodes_, edges, std::move(features), labels_, time_steps_,
                          external_ids_);
}

TransactionGraph TransactionGraph::with_labels(std::vector<Label> labels) const {
  const auto edges = edge_list();
  return TransactionGraph(num_nodes_, edges, features_, std::move(labels), time_steps_,
                          external_ids_);
}

std::int64_t Subgraph::local_of(NodeId global) const {
  auto it = std::lower_bound(global_ids.begin(), global_ids.end(), global);
  if (it == global_ids.end() || *it != global) return -1;
  return it - global_ids.begin();
}

Subgraph induced_subgraph(const TransactionGraph& graph, std::span<const NodeId> nodes) {
  if (!std::is_sorted(nodes.begin(), nodes.end()) ||
      std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
    throw InvalidArgument("induced_subgraph: node list must be sorted and unique");
  }
  constexpr NodeId kAbsent = ~NodeId{0};
  std::vector<NodeId> local(graph.num_nodes(), kAbsent);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= graph.num_nodes()) throw InvalidArgument("induced_subgraph: node out of range");
    local[nodes[i]] = static_cast<NodeId>(i);
  }

  std::vector<Edge> edges;
  FeatureMatrix features(static_cast<Eigen::Index>(nodes.size()), graph.features().cols());
  std::vector<Label> labels(nodes.size());
  std::vector<std::int32_t> steps;
  std::vector<std::uint64_t> ext;
  if (graph.has_time_steps()) steps.resize(nodes.size());
  if (!graph.external_ids().empty()) ext.resize(nodes.size());

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const NodeId g = nodes[i];
    features.row(static_cast<Eigen::Index>(i)) = graph.features().row(g);
    labels[i] = graph.label(g);
    if (!steps.empty()) steps[i] = graph.time_steps()[g];
    if (!ext.empty()) ext[i] = graph.external_ids()[g];
    for (NodeId w : graph.out_neighbors(g)) {
      if (local[w] != kAbsent) edges.push_back({static_cast<NodeId>(i), local[w]});
    }
  }
  Subgraph sub;
  sub.graph = TransactionGraph(nodes.size(), edges, std::move(features), std::move(labels),
                               std::move(steps), std::move(ext));
  sub.global_ids.assign(nodes.begin(), nodes.end());
  return sub;
}

}  // namespace fgv
