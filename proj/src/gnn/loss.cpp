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
#include <unordered_map>

#include <fmt/format.h>

#include "fgv/error.hpp"
#include "fgv/gnn.hpp"

namespace fgv {

namespace {

constexpr double kNormEps = 1e-8;

}  // namespace

ClassWeights inverse_frequency_weights(std::span<const Label> labels, std::span<const NodeId> rows) {
  double licit = 0;
  double illicit = 0;
  for (NodeId r : rows) {
    if (r >= labels.size()) throw InvalidArgument("inverse_frequency_weights: row out of range");
    switch (labels[r]) {
      case Label::kLicit: licit += 1; break;
      case Label::kIllicit: illicit += 1; break;
      case Label::kUnknown: throw InvalidArgument("inverse_frequency_weights: unlabelled row");
    }
  }
  const double n = licit + illicit;
  return {licit > 0 ? n / (2 * licit) : 0.0, illicit > 0 ? n / (2 * illicit) : 0.0};
}

template <class T>
LossAndGrad<T> classification_loss(const Matrix<T>& logits, std::span<const Label> labels,
                                   std::span<const NodeId> rows, const ClassWeights& weights) {
  if (logits.cols() != static_cast<Eigen::Index>(kNumClasses)) {
    throw ShapeError(fmt::format("classification_loss: expected {} logit columns, got {}", kNumClasses, logits.cols()));
  }
  if (labels.size() != static_cast<std::size_t>(logits.rows())) {
    throw ShapeError("classification_loss: labels do not match the logits");
  }
  if (rows.empty()) throw InvalidArgument("classification_loss: empty mask");
  LossAndGrad<T> out;
  out.grad = Matrix<T>::Zero(logits.rows(), logits.cols());

  double weight_sum = 0;
  for (NodeId r : rows) {
    if (r >= labels.size()) throw InvalidArgument("classification_loss: row out of range");
    if (labels[r] == Label::kUnknown) throw InvalidArgument("classification_loss: unlabelled row");
    weight_sum += weights.of(labels[r]);
  }
  if (!(weight_sum > 0)) throw InvalidArgument("classification_loss: class weights sum to zero");

  double total = 0;
  for (NodeId r : rows) {
    const int y = static_cast<int>(labels[r]);
    const double a = static_cast<double>(logits(r, 0));
    const double b = static_cast<double>(logits(r, 1));
    const double m = std::max(a, b);
    const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
    const double p[2] = {std::exp(a - lse), std::exp(b - lse)};
    const double w = weights.of(labels[r]);
    total += w * (lse - (y == 0 ? a : b));
    for (int c = 0; c < 2; ++c) {
      out.grad(r, c) = static_cast<T>(w * (p[c] - (c == y ? 1.0 : 0.0)) / weight_sum);
    }
  }
  out.value = total / weight_sum;
  return out;
}

template <class T>
LossAndGrad<T> cosine_alignment_loss(const Matrix<T>& local, const Matrix<T>& foreign) {
  if (local.rows() != foreign.rows() || local.cols() != foreign.cols()) {
    throw ShapeError("cosine_alignment_loss: local and foreign shapes differ");
  }
  LossAndGrad<T> out;
  out.grad = Matrix<T>::Zero(local.rows(), local.cols());
  const auto n = local.rows();
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd a = local.row(i).template cast<double>();
    const Eigen::RowVectorXd b = foreign.row(i).template cast<double>();
    const double na = std::max(a.norm(), kNormEps);
    const double nb = std::max(b.norm(), kNormEps);
    const double cos = a.dot(b) / (na * nb);
    total += 1.0 - cos;
    // d(cos)/da = b/(|a||b|) - cos a/|a|^2; the second term vanishes once |a| is clamped.
    Eigen::RowVectorXd dcos = b / (na * nb);
    if (a.norm() > kNormEps) dcos -= cos * a / (na * na);
    out.grad.row(i) = (-inv_n * dcos).template cast<T>();
  }
  out.value = total * inv_n;
  return out;
}

double total_loss(double classify, double boundary, double lambda) {
  if (lambda < 0) throw InvalidArgument(fmt::format("lambda must be non-negative, got {}", lambda));
  return classify + lambda * boundary;
}

LossAndGrad<float> boundary_alignment_loss(const EmbeddingBatch& local, const EmbeddingBatch& foreign) {
  if (local.vectors.rows() != static_cast<Eigen::Index>(local.size()) ||
      foreign.vectors.rows() != static_cast<Eigen::Index>(foreign.size())) {
    throw ShapeError("boundary_alignment_loss: batch ids and vectors disagree");
  }
  LossAndGrad<float> out;
  out.grad = FeatureMatrix::Zero(local.vectors.rows(), local.vectors.cols());
  if (local.size() == 0 || foreign.size() == 0) return out;
  if (local.vectors.cols() != foreign.vectors.cols()) {
    throw ShapeError("boundary_alignment_loss: embedding widths differ");
  }
  std::unordered_map<std::uint64_t, Eigen::Index> foreign_row;
  for (std::size_t j = 0; j < foreign.size(); ++j) foreign_row.emplace(foreign.node_ids[j], static_cast<Eigen::Index>(j));

  std::vector<Eigen::Index> li;
  std::vector<Eigen::Index> fj;
  for (std::size_t i = 0; i < local.size(); ++i) {
    if (auto it = foreign_row.find(local.node_ids[i]); it != foreign_row.end()) {
      li.push_back(static_cast<Eigen::Index>(i));
      fj.push_back(it->second);
    }
  }
  if (li.empty()) return out;
  const auto width = local.vectors.cols();
  Matrix<double> a(static_cast<Eigen::Index>(li.size()), width);
  Matrix<double> b(static_cast<Eigen::Index>(li.size()), width);
  for (std::size_t m = 0; m < li.size(); ++m) {
    a.row(static_cast<Eigen::Index>(m)) = local.vectors.row(li[m]).cast<double>();
    b.row(static_cast<Eigen::Index>(m)) = foreign.vectors.row(fj[m]).cast<double>();
  }
  const auto matched = cosine_alignment_loss(a, b);
  out.value = matched.value;
  for (std::size_t m = 0; m < li.size(); ++m) {
    out.grad.row(li[m]) = matched.grad.row(static_cast<Eigen::Index>(m)).cast<float>();
  }
  return out;
}

template LossAndGrad<float> classification_loss(const Matrix<float>&, std::span<const Label>,
                                                std::span<const NodeId>, const ClassWeights&);
template LossAndGrad<double> classification_loss(const Matrix<double>&, std::span<const Label>,
                                                 std::span<const NodeId>, const ClassWeights&);
template LossAndGrad<float> cosine_alignment_loss(const Matrix<float>&, const Matrix<float>&);
template LossAndGrad<double> cosine_alignment_loss(const Matrix<double>&, const Matrix<double>&);

}  // namespace fgv
