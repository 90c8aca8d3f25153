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

// Privacy audits run against trained artifacts: an MLP adversary that
// regresses node features from shared embeddings, and a shadow-model
// membership inference attack.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fgv/gnn.hpp"
#include "fgv/partition.hpp"

namespace fgv {

struct RegressorSpec {
  std::vector<std::size_t> hidden = {256, 128};
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double test_fraction = 0.3;
  std::uint64_t seed = 42;
};

struct InversionReport {
  double mse = 0;           ///< mean over test rows and all features
  double r2 = 0;            ///< 1 - sum SS_res / sum SS_tot over features
  double pearson_mean = 0;  ///< over features that vary on the test split
  std::size_t pearson_features = 0;
  std::size_t constant_features = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  RegressorSpec attacker;
  std::vector<std::string> notes;
};

/// Trains the regressor on a seeded 70/30 row split (inputs and targets
/// standardised with training statistics) and scores the held-out rows on
/// the original target scale. Needs at least 100 aligned rows.
InversionReport inversion_attack(const FeatureMatrix& embeddings, const FeatureMatrix& features,
                                 const RegressorSpec& spec = {});

/// Layer-2 embeddings of every boundary node, computed by `model` on its own
/// silo subgraph, pooled over silos, with the matching feature rows.
struct EmbeddingFeaturePairs {
  std::vector<NodeId> nodes;
  FeatureMatrix embeddings;
  FeatureMatrix features;
};
EmbeddingFeaturePairs boundary_embedding_pairs(const SageModel& model, const TransactionGraph& graph,
                                               const SiloPartition& partition);

struct MembershipConfig {
  std::size_t num_shadows = 1;
  std::size_t shadow_epochs = 200;
  double shadow_learning_rate = 0.01;
  double shadow_weight_decay = 0.0;
  /// Share of the non-member pool held back for scoring the target; the
  /// rest trains the shadows.
  double eval_fraction = 1.0 / 3.0;
  std::size_t min_eval = 10;
  std::uint64_t seed = 42;
};

struct MiaReport {
  double auc = 0.5;
  std::string attack_features = "per-node cross-entropy loss, max softmax confidence";
  std::size_t num_shadows = 0;
  std::size_t eval_members = 0;
  std::size_t eval_nonmembers = 0;
  std::size_t shadow_members = 0;  ///< per shadow
  std::size_t shadow_nonmembers = 0;
  double shadow_auc = 0.5;  ///< attack classifier on its own training data
  MembershipConfig config;
};

/// `members` are the target's training nodes, `nonmembers` labelled nodes it
/// never trained on; both index `graph`, which carries the features the
/// target saw. Shadows share the target architecture and are trained on
/// halves of the non-member pool disjoint from the scored nodes. Throws
/// DataError when the pool cannot give balanced sets of min_eval nodes.
MiaReport membership_inference(const TransactionGraph& graph, const SageModel& target,
                               std::span<const NodeId> members, std::span<const NodeId> nonmembers,
                               const MembershipConfig& config = {});

/// Area under the ROC curve via the Mann-Whitney statistic, ties counted half.
double roc_auc(std::span<const double> positive_scores, std::span<const double> negative_scores);

std::string to_json(const InversionReport& report);
std::string to_json(const MiaReport& report);

}  // namespace fgv
