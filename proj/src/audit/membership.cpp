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

#include <fmt/format.h>
#include <json.hpp>

#include "fgv/audit.hpp"
#include "fgv/error.hpp"

namespace fgv {

namespace {

struct AttackFeatures {
  std::vector<double> loss;
  std::vector<double> confidence;
};

AttackFeatures attack_features(const SageModel& model, const TransactionGraph& graph,
                               const MeanAggregator& agg, std::span<const NodeId> nodes) {
  const auto cache = forward(model, agg, graph.features());
  AttackFeatures out;
  for (NodeId v : nodes) {
    const double a = cache.logits(v, 0);
    const double b = cache.logits(v, 1);
    const double m = std::max(a, b);
    const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
    const double own = graph.label(v) == Label::kIllicit ? b : a;
    out.loss.push_back(lse - own);
    out.confidence.push_back(std::exp(m - lse));
  }
  return out;
}

/// Two-feature logistic regression fitted by Newton steps with a small ridge.
class AttackClassifier {
 public:
  void fit(const AttackFeatures& in, const AttackFeatures& out) {
    const std::size_t n = in.loss.size() + out.loss.size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    Eigen::Index r = 0;
    for (const auto* set : {&in, &out}) {
      for (std::size_t i = 0; i < set->loss.size(); ++i, ++r) {
        x(r, 0) = 1.0;
        x(r, 1) = set->loss[i];
        x(r, 2) = set->confidence[i];
        y(r) = set == &in ? 1.0 : 0.0;
      }
    }
    for (int c = 1; c < 3; ++c) {
      mean_[c] = x.col(c).mean();
      const double sd = std::sqrt((x.col(c).array() - mean_[c]).square().mean());
      scale_[c] = sd > 0 ? sd : 1.0;
      x.col(c) = (x.col(c).array() - mean_[c]) / scale_[c];
    }
    Eigen::Vector3d w = Eigen::Vector3d::Zero();
    constexpr double kRidge = 1e-3;
    for (int iter = 0; iter < 100; ++iter) {
      const Eigen::VectorXd p = ((-(x * w).array()).exp() + 1.0).inverse().matrix();
      const Eigen::VectorXd s = p.array() * (1.0 - p.array());
      Eigen::Vector3d g = x.transpose() * (p - y) + kRidge * w;
      Eigen::Matrix3d h = x.transpose() * s.asDiagonal() * x + kRidge * Eigen::Matrix3d::Identity();
      const Eigen::Vector3d delta = h.ldlt().solve(g);
      w -= delta;
      if (delta.norm() < 1e-10) break;
    }
    w_ = w;
  }

  std::vector<double> score(const AttackFeatures& f) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < f.loss.size(); ++i) {
      out.push_back(w_(0) + w_(1) * (f.loss[i] - mean_[1]) / scale_[1] +
                    w_(2) * (f.confidence[i] - mean_[2]) / scale_[2]);
    }
    return out;
  }

 private:
  Eigen::Vector3d w_ = Eigen::Vector3d::Zero();
  double mean_[3] = {0, 0, 0};
  double scale_[3] = {1, 1, 1};
};

void append(AttackFeatures& into, const AttackFeatures& from) {
  into.loss.insert(into.loss.end(), from.loss.begin(), from.loss.end());
  into.confidence.insert(into.confidence.end(), from.confidence.begin(), from.confidence.end());
}

SageModel train_shadow(const TransactionGraph& graph, const MeanAggregator& agg, std::span<const NodeId> rows,
                       std::size_t hidden, const MembershipConfig& config, std::uint64_t seed) {
  auto model = SageModel::glorot(graph.feature_dim(), hidden, seed);
  AdamConfig adam;
  adam.learning_rate = config.shadow_learning_rate;
  adam.weight_decay = config.shadow_weight_decay;
  auto state = AdamState::for_model(model, adam);
  const auto weights = inverse_frequency_weights(graph.labels(), rows);
  for (std::size_t e = 0; e < config.shadow_epochs; ++e) {
    const auto cache = forward(model, agg, graph.features());
    const auto loss = classification_loss(cache.logits, graph.labels(), rows, weights);
    adam_step(model, backward(model, agg, cache, loss.grad), state);
  }
  return model;
}

}  // namespace

double roc_auc(std::span<const double> positive_scores, std::span<const double> negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) throw InvalidArgument("roc_auc: empty class");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  for (double s : positive_scores) items.push_back({s, true});
  for (double s : negative_scores) items.push_back({s, false});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  double rank_sum = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (items[t].positive) rank_sum += mid_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(positive_scores.size());
  const double nn = static_cast<double>(negative_scores.size());
  return (rank_sum - np * (np + 1) / 2) / (np * nn);
}

MiaReport membership_inference(const TransactionGraph& graph, const SageModel& target,
                               std::span<const NodeId> members, std::span<const NodeId> nonmembers,
                               const MembershipConfig& config) {
  if (target.in_dim() != graph.feature_dim()) {
    throw ShapeError(fmt::format("membership_inference: model expects {} features, graph has {}", target.in_dim(),
                                 graph.feature_dim()));
  }
  if (config.num_shadows == 0 || !(config.eval_fraction > 0 && config.eval_fraction < 1)) {
    throw InvalidArgument("membership_inference: invalid shadow settings");
  }
  for (const auto set : {members, nonmembers}) {
    for (NodeId v : set) {
      if (v >= graph.num_nodes()) throw InvalidArgument("membership_inference: node out of range");
      if (graph.label(v) == Label::kUnknown) throw DataError("membership_inference: unlabelled node in attack set");
    }
  }

  std::mt19937_64 rng(config.seed);
  std::vector<NodeId> pool(nonmembers.begin(), nonmembers.end());
  std::shuffle(pool.begin(), pool.end(), rng);
  const auto n_eval_out = static_cast<std::size_t>(std::lround(config.eval_fraction * pool.size()));
  const std::size_t n_eval = std::min(members.size(), n_eval_out);
  const std::size_t shadow_half = (pool.size() - n_eval_out) / 2;
  if (n_eval < config.min_eval || shadow_half < config.min_eval) {
    throw DataError(fmt::format(
        "membership_inference: insufficient held-out nodes for a balanced evaluation ({} members, {} non-members; "
        "need {} scored per side and {} per shadow half)",
        members.size(), nonmembers.size(), config.min_eval, config.min_eval));
  }
  std::vector<NodeId> eval_out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_eval));
  std::vector<NodeId> shadow_pool(pool.begin() + static_cast<std::ptrdiff_t>(n_eval_out), pool.end());
  std::vector<NodeId> eval_in(members.begin(), members.end());
  std::shuffle(eval_in.begin(), eval_in.end(), rng);
  eval_in.resize(n_eval);

  const MeanAggregator agg(graph);
  AttackFeatures shadow_in, shadow_out;
  for (std::size_t s = 0; s < config.num_shadows; ++s) {
    std::shuffle(shadow_pool.begin(), shadow_pool.end(), rng);
    std::vector<NodeId> in(shadow_pool.begin(), shadow_pool.begin() + static_cast<std::ptrdiff_t>(shadow_half));
    const std::span<const NodeId> out(shadow_pool.data() + shadow_half, shadow_half);
    std::sort(in.begin(), in.end());
    const auto shadow = train_shadow(graph, agg, in, target.hidden(), config, rng());
    append(shadow_in, attack_features(shadow, graph, agg, in));
    append(shadow_out, attack_features(shadow, graph, agg, out));
  }
  AttackClassifier classifier;
  classifier.fit(shadow_in, shadow_out);

  MiaReport report;
  report.config = config;
  report.num_shadows = config.num_shadows;
  report.eval_members = n_eval;
  report.eval_nonmembers = n_eval;
  report.shadow_members = shadow_half;
  report.shadow_nonmembers = shadow_half;
  report.shadow_auc = roc_auc(classifier.score(shadow_in), classifier.score(shadow_out));
  report.auc = roc_auc(classifier.score(attack_features(target, graph, agg, eval_in)),
                       classifier.score(attack_features(target, graph, agg, eval_out)));
  return report;
}

std::string to_json(const InversionReport& report) {
  nlohmann::json j;
  j["attack"] = "embedding_inversion";
  j["mse"] = report.mse;
  j["r2"] = report.r2;
  j["pearson_mean"] = report.pearson_mean;
  j["pearson_features"] = report.pearson_features;
  j["constant_features"] = report.constant_features;
  j["train_rows"] = report.train_rows;
  j["test_rows"] = report.test_rows;
  j["attacker"] = {{"hidden", report.attacker.hidden},
                   {"activation", "relu"},
                   {"epochs", report.attacker.epochs},
                   {"batch_size", report.attacker.batch_size},
                   {"optimizer", "adam"},
                   {"learning_rate", report.attacker.learning_rate},
                   {"test_fraction", report.attacker.test_fraction},
                   {"seed", report.attacker.seed}};
  j["notes"] = report.notes;
  return j.dump(2);
}

std::string to_json(const MiaReport& report) {
  nlohmann::json j;
  j["attack"] = "membership_inference";
  j["auc"] = report.auc;
  j["attack_features"] = report.attack_features;
  j["attack_model"] = "logistic regression";
  j["num_shadows"] = report.num_shadows;
  j["eval_members"] = report.eval_members;
  j["eval_nonmembers"] = report.eval_nonmembers;
  j["shadow_members"] = report.shadow_members;
  j["shadow_nonmembers"] = report.shadow_nonmembers;
  j["shadow_auc"] = report.shadow_auc;
  j["config"] = {{"shadow_epochs", report.config.shadow_epochs},
                 {"shadow_learning_rate", report.config.shadow_learning_rate},
                 {"shadow_weight_decay", report.config.shadow_weight_decay},
                 {"eval_fraction", report.config.eval_fraction},
                 {"min_eval", report.config.min_eval},
                 {"seed", report.config.seed}};
  return j.dump(2);
}

}  // namespace fgv
