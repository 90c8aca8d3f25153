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

#include <doctest.h>

#include "fgv/audit.hpp"
#include "fgv/error.hpp"
#include "support.hpp"

using namespace fgv;

namespace {

double pairwise_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0;
  for (double p : pos) {
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return wins / static_cast<double>(pos.size() * neg.size());
}

FeatureMatrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  FeatureMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

SageModel train_to_memorise(const TransactionGraph& graph, std::span<const NodeId> rows, std::size_t hidden,
                            std::size_t steps) {
  auto model = SageModel::glorot(graph.feature_dim(), hidden, 11);
  AdamConfig adam;
  adam.weight_decay = 0;
  auto state = AdamState::for_model(model, adam);
  const MeanAggregator agg(graph);
  const auto w = inverse_frequency_weights(graph.labels(), rows);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto cache = forward(model, agg, graph.features());
    adam_step(model, backward(model, agg, cache, classification_loss(cache.logits, graph.labels(), rows, w).grad),
              state);
  }
  return model;
}

struct Toy {
  TransactionGraph graph;
  std::vector<NodeId> members, nonmembers;
};

/// Random features, random labels and a sparse random topology, so any
/// advantage on members comes from memorisation alone.
Toy random_label_toy(std::size_t n, std::size_t n_members, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
  for (std::size_t e = 0; e < n; ++e) {
    const NodeId a = pick(rng), b = pick(rng);
    if (a != b) edges.push_back({a, b});
  }
  std::vector<Label> labels(n);
  for (auto& l : labels) l = rng() % 2 ? Label::kIllicit : Label::kLicit;
  Toy t{TransactionGraph(n, edges, gaussian(static_cast<Eigen::Index>(n), 16, seed + 1), labels), {}, {}};
  std::vector<NodeId> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  t.members.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_members));
  t.nonmembers.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_members), ids.end());
  std::sort(t.members.begin(), t.members.end());
  return t;
}

}  // namespace

TEST_CASE("roc_auc agrees with the pairwise count") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coarse(0, 6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pos(3 + trial), neg(5 + 2 * trial);
    for (auto& v : pos) v = coarse(rng) + 0.5;
    for (auto& v : neg) v = coarse(rng);
    for (std::size_t i = 0; i < neg.size(); i += 3) neg[i] += 0.5;  // ties across classes
    CHECK(roc_auc(pos, neg) == doctest::Approx(pairwise_auc(pos, neg)).epsilon(1e-12));
  }
  const std::vector<double> lo{0, 1}, hi{2, 3};
  CHECK(roc_auc(hi, lo) == 1.0);
  CHECK(roc_auc(lo, hi) == 0.0);
  CHECK(roc_auc(lo, lo) == 0.5);
  CHECK_THROWS_AS(roc_auc({}, lo), InvalidArgument);
}

TEST_CASE("inversion attack") {
  const auto x = gaussian(600, 8, 1);

  SUBCASE("identity embeddings are reconstructed") {
    const auto r = inversion_attack(x, x);
    CHECK(r.r2 >= 0.95);
    CHECK(r.r2 <= 1.0);
    CHECK(r.mse < 0.05);
    CHECK(r.pearson_mean > 0.97);
    CHECK(r.test_rows == 180);
    CHECK(r.train_rows == 420);
  }
  SUBCASE("independent noise gives no signal") {
    const auto r = inversion_attack(gaussian(600, 16, 2), x);
    CHECK(r.r2 <= 0.05);
    CHECK(r.mse >= 0);
  }
  SUBCASE("shuffled pairs give no signal") {
    std::vector<Eigen::Index> perm(600);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
    FeatureMatrix shuffled(600, 8);
    for (Eigen::Index i = 0; i < 600; ++i) shuffled.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    CHECK(inversion_attack(shuffled, x).r2 <= 0.05);
  }
  SUBCASE("deterministic per seed") {
    RegressorSpec fast;
    fast.epochs = 5;
    const auto a = inversion_attack(x, x, fast);
    const auto b = inversion_attack(x, x, fast);
    CHECK(a.mse == b.mse);
    CHECK(a.r2 == b.r2);
  }
  SUBCASE("constant targets are excluded from the correlation mean") {
    FeatureMatrix y = x;
    y.col(3).setConstant(2.5f);
    RegressorSpec fast;
    fast.epochs = 20;
    const auto r = inversion_attack(x, y, fast);
    CHECK(r.constant_features == 1);
    CHECK(r.pearson_features == 7);
    CHECK(!r.notes.empty());
    CHECK(to_json(r).find("\"r2\"") != std::string::npos);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(inversion_attack(gaussian(99, 4, 1), gaussian(99, 4, 2)), InvalidArgument);
    CHECK_THROWS_AS(inversion_attack(gaussian(120, 4, 1), gaussian(121, 4, 2)), ShapeError);
    FeatureMatrix flat = FeatureMatrix::Ones(200, 3);
    CHECK_THROWS_AS(inversion_attack(gaussian(200, 4, 1), flat), DataError);
  }
}

TEST_CASE("boundary embedding pairs cover every boundary node once") {
  const auto g = testing::random_graph(60, 150, 5, 4, false);
  std::vector<SiloId> assign(60);
  for (NodeId v = 0; v < 60; ++v) assign[v] = static_cast<SiloId>(v % 3);
  const SiloPartition p(g, assign, 3);
  const auto model = SageModel::glorot(5, 8, 1);
  const auto pairs = boundary_embedding_pairs(model, g, p);
  std::size_t expected = 0;
  for (SiloId k = 0; k < 3; ++k) expected += p.boundary(k).size();
  REQUIRE(pairs.nodes.size() == expected);
  CHECK(pairs.embeddings.rows() == static_cast<Eigen::Index>(expected));
  CHECK(pairs.embeddings.cols() == 8);
  for (std::size_t i = 0; i < pairs.nodes.size(); ++i) {
    CHECK(pairs.features.row(static_cast<Eigen::Index>(i)) == g.features().row(pairs.nodes[i]));
  }
}

TEST_CASE("membership inference") {
  SUBCASE("untrained target leaks nothing") {
    const auto toy = random_label_toy(2000, 1000, 21);
    const auto target = SageModel::glorot(16, 32, 99);
    MembershipConfig cfg;
    cfg.shadow_epochs = 100;
    const auto r = membership_inference(toy.graph, target, toy.members, toy.nonmembers, cfg);
    CHECK(std::abs(r.auc - 0.5) <= 0.05);
    CHECK(r.eval_members == r.eval_nonmembers);
    CHECK(r.shadow_auc > 0.5);
  }
  SUBCASE("memorising target leaks membership") {
    const auto toy = random_label_toy(200, 80, 7);
    const auto target = train_to_memorise(toy.graph, toy.members, 64, 300);
    MembershipConfig cfg;
    cfg.shadow_epochs = 300;
    const auto r = membership_inference(toy.graph, target, toy.members, toy.nonmembers, cfg);
    CHECK(r.auc > 0.7);
    CHECK(r.eval_members == 40);
    const auto again = membership_inference(toy.graph, target, toy.members, toy.nonmembers, cfg);
    CHECK(again.auc == r.auc);
    CHECK(to_json(r).find("\"auc\"") != std::string::npos);
  }
  SUBCASE("too few held-out nodes") {
    const auto toy = random_label_toy(200, 180, 7);
    const auto target = SageModel::glorot(16, 8, 1);
    CHECK_THROWS_AS(membership_inference(toy.graph, target, toy.members, toy.nonmembers), DataError);
  }
}
