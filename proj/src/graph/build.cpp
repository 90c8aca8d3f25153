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
#include <numeric>
#include <random>
#include <utility>

#include <fmt/format.h>

#include "fgv/error.hpp"
#include "fgv/graph.hpp"

namespace fgv {

TransactionGraph build_knn_graph(const FeatureMatrix& features, std::size_t k, DistanceMetric metric,
                                 std::vector<Label> labels) {
  const std::size_t n = static_cast<std::size_t>(features.rows());
  if (k == 0) throw InvalidArgument("build_knn_graph: k must be at least 1");
  if (k >= n) throw InvalidArgument(fmt::format("build_knn_graph: k={} needs more than {} nodes", k, n));
  if (metric != DistanceMetric::kEuclidean) throw InvalidArgument("build_knn_graph: unsupported metric");
  if (labels.empty()) labels.assign(n, Label::kUnknown);

  const Eigen::Index d = features.cols();
  std::vector<Edge> edges;
  edges.reserve(n * k);
  std::vector<std::pair<double, NodeId>> candidates(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double dist = 0.0;
      for (Eigen::Index f = 0; f < d; ++f) {
        const double diff = static_cast<double>(features(i, f)) - features(j, f);
        dist += diff * diff;
      }
      candidates[c++] = {dist, static_cast<NodeId>(j)};
    }
    // Pair ordering breaks distance ties by ascending node id.
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end());
    for (std::size_t r = 0; r < k; ++r) edges.push_back({static_cast<NodeId>(i), candidates[r].second});
  }
  return TransactionGraph(n, edges, features, std::move(labels));
}

SyntheticGraph generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.p_inter >= 0.0 && spec.p_inter < spec.p_intra && spec.p_intra <= 1.0)) {
    throw InvalidArgument("generate_synthetic: need 0 <= p_inter < p_intra <= 1");
  }
  if (spec.illicit_fraction < 0.0 || spec.illicit_fraction > 1.0) {
    throw InvalidArgument("generate_synthetic: illicit_fraction must lie in [0, 1]");
  }
  if (spec.num_communities == 0 || spec.nodes_per_community == 0 || spec.feature_dim == 0) {
    throw InvalidArgument("generate_synthetic: sizes must be positive");
  }
  const std::size_t n = spec.num_communities * spec.nodes_per_community;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticGraph out;
  out.community.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    out.community[v] = static_cast<std::uint32_t>(v / spec.nodes_per_community);
  }

  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = out.community[u] == out.community[v] ? spec.p_intra : spec.p_inter;
      if (unit(rng) < p) {
        if (unit(rng) < 0.5) {
          edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
        } else {
          edges.push_back({static_cast<NodeId>(v), static_cast<NodeId>(u)});
        }
      }
    }
  }

  // Illicit nodes are drawn from the even-numbered ("designated") communities.
  std::vector<NodeId> designated;
  for (std::size_t v = 0; v < n; ++v) {
    if (out.community[v] % 2 == 0) designated.push_back(static_cast<NodeId>(v));
  }
  std::shuffle(designated.begin(), designated.end(), rng);
  const auto num_illicit = std::min<std::size_t>(
      designated.size(), static_cast<std::size_t>(std::llround(spec.illicit_fraction * static_cast<double>(n))));
  std::vector<Label> labels(n, Label::kLicit);
  for (std::size_t i = 0; i < num_illicit; ++i) labels[designated[i]] = Label::kIllicit;

  const auto d = static_cast<Eigen::Index>(spec.feature_dim);
  Matrix<double> centers(static_cast<Eigen::Index>(spec.num_communities), d);
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (Eigen::Index f = 0; f < d; ++f) centers(c, f) = spec.community_shift * gauss(rng);
  }
  FeatureMatrix features(static_cast<Eigen::Index>(n), d);
  for (std::size_t v = 0; v < n; ++v) {
    for (Eigen::Index f = 0; f < d; ++f) {
      double x = gauss(rng) + centers(out.community[v], f);
      if (labels[v] == Label::kIllicit && f < (d + 1) / 2) x += spec.illicit_shift;
      features(static_cast<Eigen::Index>(v), f) = static_cast<float>(x);
    }
  }
  out.graph = TransactionGraph(n, edges, std::move(features), std::move(labels));
  return out;
}

std::vector<NodeId> NodeMask::nodes_with(NodeRole role) const {
  std::vector<NodeId> out;
  for (std::size_t v = 0; v < roles.size(); ++v) {
    if (roles[v] == role) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

std::size_t NodeMask::count(NodeRole role) const {
  return static_cast<std::size_t>(std::count(roles.begin(), roles.end(), role));
}

NodeMask make_split(const TransactionGraph& graph, const SplitRule& rule) {
  const auto counts = graph.label_counts();
  if (counts.illicit + counts.licit == 0) throw DataError("make_split: graph has no labelled nodes");

  NodeMask mask;
  mask.roles.assign(graph.num_nodes(), NodeRole::kExcluded);
  if (const auto* temporal = std::get_if<TemporalSplit>(&rule)) {
    if (!graph.has_time_steps()) throw DataError("make_split: temporal rule needs per-node time steps");
    for (NodeId v = 0; v < graph.num_nodes(); ++v) {
      if (graph.label(v) == Label::kUnknown) continue;
      mask.roles[v] = graph.time_steps()[v] <= temporal->last_train_step ? NodeRole::kTrain : NodeRole::kTest;
    }
    mask.derivation = fmt::format("temporal:last_train_step={}", temporal->last_train_step);
    return mask;
  }

  const auto& random = std::get<RandomSplit>(rule);
  if (!(random.train_fraction > 0.0 && random.train_fraction < 1.0)) {
    throw InvalidArgument("make_split: train_fraction must lie in (0, 1)");
  }
  std::vector<NodeId> labelled;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    if (graph.label(v) != Label::kUnknown) labelled.push_back(v);
  }
  std::mt19937_64 rng(random.seed);
  std::shuffle(labelled.begin(), labelled.end(), rng);
  const auto num_train = static_cast<std::size_t>(
      std::llround(random.train_fraction * static_cast<double>(labelled.size())));
  for (std::size_t i = 0; i < labelled.size(); ++i) {
    mask.roles[labelled[i]] = i < num_train ? NodeRole::kTrain : NodeRole::kTest;
  }
  mask.derivation = fmt::format("random:train_fraction={},seed={}", random.train_fraction, random.seed);
  return mask;
}

FeatureMatrix zscore_normalize(const FeatureMatrix& features, const NodeMask& mask) {
  if (static_cast<std::size_t>(features.rows()) != mask.roles.size()) {
    throw InvalidArgument("zscore_normalize: mask does not cover the feature matrix");
  }
  const auto train = mask.nodes_with(NodeRole::kTrain);
  if (train.empty()) throw DataError("zscore_normalize: no training nodes");
  const Eigen::Index d = features.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(d);
  for (NodeId v : train) mean += features.row(v).cast<double>().transpose();
  mean /= static_cast<double>(train.size());
  for (NodeId v : train) {
    const Eigen::VectorXd diff = features.row(v).cast<double>().transpose() - mean;
    sq += diff.cwiseProduct(diff);
  }
  Eigen::VectorXd stddev = (sq / static_cast<double>(train.size())).cwiseSqrt();
  for (Eigen::Index f = 0; f < d; ++f) {
    if (stddev[f] == 0.0) stddev[f] = 1.0;
  }
  FeatureMatrix out(features.rows(), d);
  for (Eigen::Index v = 0; v < features.rows(); ++v) {
    for (Eigen::Index f = 0; f < d; ++f) {
      out(v, f) = static_cast<float>((features(v, f) - mean[f]) / stddev[f]);
    }
  }
  return out;
}

}  // namespace fgv
