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

#include "fgv/audit.hpp"
#include "fgv/error.hpp"

namespace fgv {

namespace {

constexpr std::size_t kMinInversionRows = 100;

struct Dense {
  FeatureMatrix w, b, mw, vw, mb, vb;
};

class Mlp {
 public:
  Mlp(std::size_t in, std::span<const std::size_t> hidden, std::size_t out, std::mt19937_64& rng) {
    std::vector<std::size_t> widths{in};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(out);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const auto r = static_cast<Eigen::Index>(widths[l]);
      const auto c = static_cast<Eigen::Index>(widths[l + 1]);
      Dense d{FeatureMatrix(r, c), FeatureMatrix::Zero(1, c), FeatureMatrix::Zero(r, c),
              FeatureMatrix::Zero(r, c), FeatureMatrix::Zero(1, c), FeatureMatrix::Zero(1, c)};
      std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / static_cast<double>(r + c)),
                                                  std::sqrt(6.0 / static_cast<double>(r + c)));
      for (Eigen::Index i = 0; i < d.w.size(); ++i) d.w.data()[i] = static_cast<float>(dist(rng));
      layers_.push_back(std::move(d));
    }
  }

  FeatureMatrix predict(const FeatureMatrix& x) const {
    FeatureMatrix a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      FeatureMatrix z = a * layers_[l].w;
      z.rowwise() += layers_[l].b.row(0);
      a = l + 1 < layers_.size() ? FeatureMatrix(z.cwiseMax(0.0f)) : z;
    }
    return a;
  }

  /// One Adam step on the mean squared error of a minibatch.
  void train_step(const FeatureMatrix& x, const FeatureMatrix& y, const AdamConfig& adam) {
    std::vector<FeatureMatrix> acts{x};
    std::vector<FeatureMatrix> pre;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      FeatureMatrix z = acts.back() * layers_[l].w;
      z.rowwise() += layers_[l].b.row(0);
      pre.push_back(z);
      acts.push_back(l + 1 < layers_.size() ? FeatureMatrix(z.cwiseMax(0.0f)) : z);
    }
    FeatureMatrix dz = (acts.back() - y) * (2.0f / static_cast<float>(y.size()));
    ++step_;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      Dense& d = layers_[l];
      const FeatureMatrix gw = acts[l].transpose() * dz;
      const FeatureMatrix gb = dz.colwise().sum();
      if (l > 0) {
        FeatureMatrix da = dz * d.w.transpose();
        dz = (pre[l - 1].array() > 0.0f).select(da, 0.0f);
      }
      adam_update<float>({d.w.data(), static_cast<std::size_t>(d.w.size())}, {gw.data(), static_cast<std::size_t>(gw.size())},
                         {d.mw.data(), static_cast<std::size_t>(d.mw.size())},
                         {d.vw.data(), static_cast<std::size_t>(d.vw.size())}, step_, adam);
      adam_update<float>({d.b.data(), static_cast<std::size_t>(d.b.size())}, {gb.data(), static_cast<std::size_t>(gb.size())},
                         {d.mb.data(), static_cast<std::size_t>(d.mb.size())},
                         {d.vb.data(), static_cast<std::size_t>(d.vb.size())}, step_, adam);
    }
  }

 private:
  std::vector<Dense> layers_;
  std::uint64_t step_ = 0;
};

struct Standardizer {
  Eigen::RowVectorXf mean, scale;

  static Standardizer fit(const FeatureMatrix& x) {
    Standardizer s;
    const Eigen::RowVectorXd m = x.cast<double>().colwise().mean();
    const Eigen::RowVectorXd var = (x.cast<double>().rowwise() - m).array().square().colwise().mean();
    s.mean = m.cast<float>();
    s.scale = var.unaryExpr([](double v) { return v > 0 ? std::sqrt(v) : 1.0; }).cast<float>();
    return s;
  }
  FeatureMatrix apply(const FeatureMatrix& x) const {
    return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
  }
  FeatureMatrix invert(const FeatureMatrix& x) const {
    return ((x.array().rowwise() * scale.array()).rowwise() + mean.array()).matrix();
  }
};

FeatureMatrix take_rows(const FeatureMatrix& x, std::span<const std::size_t> rows) {
  FeatureMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

InversionReport inversion_attack(const FeatureMatrix& embeddings, const FeatureMatrix& features,
                                 const RegressorSpec& spec) {
  if (embeddings.rows() != features.rows()) {
    throw ShapeError(fmt::format("inversion_attack: {} embedding rows vs {} feature rows", embeddings.rows(),
                                 features.rows()));
  }
  const auto n = static_cast<std::size_t>(embeddings.rows());
  if (n < kMinInversionRows) {
    throw InvalidArgument(fmt::format("inversion_attack: need at least {} rows, got {}", kMinInversionRows, n));
  }
  if (!(spec.test_fraction > 0 && spec.test_fraction < 1) || spec.batch_size == 0 || spec.epochs == 0) {
    throw InvalidArgument("inversion_attack: invalid attacker settings");
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(spec.test_fraction * n)));
  const std::span<const std::size_t> test_idx(order.data(), n_test);
  const std::span<const std::size_t> train_idx(order.data() + n_test, n - n_test);

  const FeatureMatrix x_train_raw = take_rows(embeddings, train_idx);
  const FeatureMatrix y_train_raw = take_rows(features, train_idx);
  const auto sx = Standardizer::fit(x_train_raw);
  const auto sy = Standardizer::fit(y_train_raw);
  const FeatureMatrix x_train = sx.apply(x_train_raw);
  const FeatureMatrix y_train = sy.apply(y_train_raw);

  Mlp mlp(static_cast<std::size_t>(embeddings.cols()), spec.hidden, static_cast<std::size_t>(features.cols()), rng);
  AdamConfig adam;
  adam.learning_rate = spec.learning_rate;
  adam.weight_decay = 0.0;
  std::vector<std::size_t> batch_order(train_idx.size());
  std::iota(batch_order.begin(), batch_order.end(), 0);
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    std::shuffle(batch_order.begin(), batch_order.end(), rng);
    for (std::size_t start = 0; start < batch_order.size(); start += spec.batch_size) {
      const auto len = std::min(spec.batch_size, batch_order.size() - start);
      const std::span<const std::size_t> rows(batch_order.data() + start, len);
      mlp.train_step(take_rows(x_train, rows), take_rows(y_train, rows), adam);
    }
  }

  const Eigen::MatrixXd truth = take_rows(features, test_idx).cast<double>();
  const Eigen::MatrixXd pred = sy.invert(mlp.predict(sx.apply(take_rows(embeddings, test_idx)))).cast<double>();

  InversionReport report;
  report.attacker = spec;
  report.train_rows = train_idx.size();
  report.test_rows = test_idx.size();
  report.mse = (pred - truth).array().square().mean();

  const Eigen::RowVectorXd mean_t = truth.colwise().mean();
  const Eigen::RowVectorXd mean_p = pred.colwise().mean();
  double ss_res = 0, ss_tot = 0, pearson_sum = 0;
  std::size_t flat_predictions = 0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j) {
    const Eigen::ArrayXd t = truth.col(j).array() - mean_t(j);
    const Eigen::ArrayXd p = pred.col(j).array() - mean_p(j);
    ss_res += (pred.col(j) - truth.col(j)).squaredNorm();
    ss_tot += t.square().sum();
    if (t.square().sum() == 0) {
      ++report.constant_features;
      continue;
    }
    const double pp = p.square().sum();
    if (pp == 0) ++flat_predictions;
    pearson_sum += pp > 0 ? (t * p).sum() / std::sqrt(t.square().sum() * pp) : 0.0;
    ++report.pearson_features;
  }
  if (ss_tot == 0) throw DataError("inversion_attack: every target feature is constant on the test split");
  report.r2 = 1.0 - ss_res / ss_tot;
  report.pearson_mean = pearson_sum / static_cast<double>(report.pearson_features);
  if (report.constant_features > 0) {
    report.notes.push_back(fmt::format("{} feature(s) constant on the test split, excluded from the Pearson mean",
                                       report.constant_features));
  }
  if (flat_predictions > 0) {
    report.notes.push_back(fmt::format("{} feature(s) with constant predictions counted as correlation 0",
                                       flat_predictions));
  }
  return report;
}

EmbeddingFeaturePairs boundary_embedding_pairs(const SageModel& model, const TransactionGraph& graph,
                                               const SiloPartition& partition) {
  if (partition.assignment().size() != graph.num_nodes()) {
    throw InvalidArgument("boundary_embedding_pairs: partition does not cover the graph");
  }
  EmbeddingFeaturePairs out;
  std::vector<FeatureMatrix> blocks;
  for (SiloId k = 0; k < partition.num_silos(); ++k) {
    const auto boundary = partition.boundary(k);
    if (boundary.empty()) continue;
    const auto sub = induced_subgraph(graph, partition.nodes(k));
    const MeanAggregator agg(sub.graph);
    const auto batch = extract_boundary_embeddings(model, sub, agg, boundary, 0, k);
    blocks.push_back(batch.vectors);
    out.nodes.insert(out.nodes.end(), boundary.begin(), boundary.end());
  }
  out.embeddings.resize(static_cast<Eigen::Index>(out.nodes.size()), static_cast<Eigen::Index>(model.hidden()));
  out.features.resize(static_cast<Eigen::Index>(out.nodes.size()), static_cast<Eigen::Index>(graph.feature_dim()));
  Eigen::Index row = 0;
  for (const auto& b : blocks) {
    out.embeddings.middleRows(row, b.rows()) = b;
    row += b.rows();
  }
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = graph.features().row(out.nodes[i]);
  }
  return out;
}

}  // namespace fgv
