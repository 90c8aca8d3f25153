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
#include <random>

#include <fmt/format.h>

#include "fgv/error.hpp"
#include "fgv/gnn.hpp"

namespace fgv {

MeanAggregator::MeanAggregator(const TransactionGraph& graph) {
  std::vector<Edge> pairs;
  pairs.reserve(2 * graph.num_edges());
  std::vector<NodeId> row;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    row.clear();
    for (NodeId u : graph.out_neighbors(v)) {
      if (u != v) row.push_back(u);
    }
    for (NodeId u : graph.in_neighbors(v)) {
      if (u != v) row.push_back(u);
    }
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (NodeId u : row) pairs.push_back({v, u});
  }
  neighbors_ = Csr::from_edges(graph.num_nodes(), pairs, false);
}

template <class T>
Matrix<T> MeanAggregator::apply(const Matrix<T>& x) const {
  if (static_cast<std::size_t>(x.rows()) != num_nodes()) {
    throw ShapeError(fmt::format("aggregator over {} nodes applied to {} rows", num_nodes(), x.rows()));
  }
  Matrix<T> out = Matrix<T>::Zero(x.rows(), x.cols());
  for (NodeId v = 0; v < num_nodes(); ++v) {
    const auto nbrs = neighbors_.row(v);
    if (nbrs.empty()) continue;
    auto dst = out.row(v);
    for (NodeId u : nbrs) dst += x.row(u);
    dst /= static_cast<T>(nbrs.size());
  }
  return out;
}

template <class T>
Matrix<T> MeanAggregator::apply_transpose(const Matrix<T>& g) const {
  if (static_cast<std::size_t>(g.rows()) != num_nodes()) {
    throw ShapeError(fmt::format("aggregator over {} nodes applied to {} rows", num_nodes(), g.rows()));
  }
  Matrix<T> out = Matrix<T>::Zero(g.rows(), g.cols());
  for (NodeId v = 0; v < num_nodes(); ++v) {
    const auto nbrs = neighbors_.row(v);
    if (nbrs.empty()) continue;
    const T scale = T(1) / static_cast<T>(nbrs.size());
    for (NodeId u : nbrs) out.row(u) += scale * g.row(v);
  }
  return out;
}

template <class T>
BasicSageModel<T> BasicSageModel<T>::zeros(std::size_t in_dim, std::size_t hidden) {
  const auto d = static_cast<Eigen::Index>(in_dim);
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto c = static_cast<Eigen::Index>(kNumClasses);
  return {Matrix<T>::Zero(2 * d, h), Matrix<T>::Zero(1, h), Matrix<T>::Zero(2 * h, h),
          Matrix<T>::Zero(1, h),     Matrix<T>::Zero(h, c), Matrix<T>::Zero(1, c)};
}

template <class T>
BasicSageModel<T> BasicSageModel<T>::glorot(std::size_t in_dim, std::size_t hidden, std::uint64_t seed) {
  if (in_dim == 0 || hidden == 0) throw InvalidArgument("SageModel: dimensions must be positive");
  auto model = zeros(in_dim, hidden);
  std::mt19937_64 rng(seed);
  for (Matrix<T>* w : {&model.w1, &model.w2, &model.w_head}) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w->rows() + w->cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < w->size(); ++i) w->data()[i] = static_cast<T>(dist(rng));
  }
  return model;
}

template <class T>
std::size_t BasicSageModel<T>::num_parameters() const {
  std::size_t n = 0;
  for (const Matrix<T>* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

template <class T>
std::vector<T> BasicSageModel<T>::flatten() const {
  std::vector<T> out;
  out.reserve(num_parameters());
  for (const Matrix<T>* t : tensors()) out.insert(out.end(), t->data(), t->data() + t->size());
  return out;
}

template <class T>
void BasicSageModel<T>::unflatten(std::span<const T> values) {
  if (values.size() != num_parameters()) {
    throw ShapeError(fmt::format("unflatten: got {} values for {} parameters", values.size(), num_parameters()));
  }
  std::size_t offset = 0;
  for (Matrix<T>* t : tensors()) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), t->size(), t->data());
    offset += static_cast<std::size_t>(t->size());
  }
}

template <class T>
bool BasicSageModel<T>::same_shape(const BasicSageModel& other) const {
  const auto a = tensors();
  const auto b = other.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols()) return false;
  }
  return true;
}

template <class T>
ForwardCache<T> forward(const BasicSageModel<T>& model, const MeanAggregator& aggregator,
                        const Matrix<T>& features) {
  const auto d = static_cast<Eigen::Index>(model.in_dim());
  const auto h = static_cast<Eigen::Index>(model.hidden());
  if (features.cols() != d) {
    throw ShapeError(fmt::format("forward: features have {} columns, model expects {}", features.cols(), d));
  }
  if (static_cast<std::size_t>(features.rows()) != aggregator.num_nodes()) {
    throw ShapeError("forward: feature rows do not match the graph");
  }
  ForwardCache<T> cache;
  cache.features = &features;
  cache.agg_x = aggregator.apply(features);

  cache.pre1.noalias() = features * model.w1.topRows(d);
  cache.pre1.noalias() += cache.agg_x * model.w1.bottomRows(d);
  cache.pre1.rowwise() += model.b1.row(0);
  cache.h1 = cache.pre1.cwiseMax(T(0));

  cache.agg_h1 = aggregator.apply(cache.h1);
  cache.embeddings.noalias() = cache.h1 * model.w2.topRows(h);
  cache.embeddings.noalias() += cache.agg_h1 * model.w2.bottomRows(h);
  cache.embeddings.rowwise() += model.b2.row(0);

  cache.logits.noalias() = cache.embeddings * model.w_head;
  cache.logits.rowwise() += model.b_head.row(0);
  return cache;
}

template <class T>
BasicSageModel<T> backward(const BasicSageModel<T>& model, const MeanAggregator& aggregator,
                           const ForwardCache<T>& cache, const Matrix<T>& grad_logits,
                           const Matrix<T>* grad_embeddings) {
  if (cache.features == nullptr) {
    throw InvalidArgument("backward: no forward cache");
  }
  if (grad_logits.rows() != cache.logits.rows() || grad_logits.cols() != cache.logits.cols()) {
    throw ShapeError("backward: gradient does not match the logits");
  }
  if (grad_embeddings != nullptr &&
      (grad_embeddings->rows() != cache.embeddings.rows() || grad_embeddings->cols() != cache.embeddings.cols())) {
    throw ShapeError("backward: embedding gradient does not match the embeddings");
  }
  const auto d = static_cast<Eigen::Index>(model.in_dim());
  const auto h = static_cast<Eigen::Index>(model.hidden());
  auto grads = BasicSageModel<T>::zeros(model.in_dim(), model.hidden());

  grads.w_head.noalias() = cache.embeddings.transpose() * grad_logits;
  grads.b_head = grad_logits.colwise().sum();

  Matrix<T> d_emb = grad_logits * model.w_head.transpose();
  if (grad_embeddings != nullptr) d_emb += *grad_embeddings;

  grads.w2.topRows(h).noalias() = cache.h1.transpose() * d_emb;
  grads.w2.bottomRows(h).noalias() = cache.agg_h1.transpose() * d_emb;
  grads.b2 = d_emb.colwise().sum();

  Matrix<T> d_agg_h1 = d_emb * model.w2.bottomRows(h).transpose();
  Matrix<T> d_h1 = d_emb * model.w2.topRows(h).transpose();
  d_h1 += aggregator.apply_transpose(d_agg_h1);
  Matrix<T> d_pre1 = (cache.pre1.array() > T(0)).select(d_h1, T(0));

  grads.w1.topRows(d).noalias() = cache.features->transpose() * d_pre1;
  grads.w1.bottomRows(d).noalias() = cache.agg_x.transpose() * d_pre1;
  grads.b1 = d_pre1.colwise().sum();
  return grads;
}

template class BasicSageModel<float>;
template class BasicSageModel<double>;
template Matrix<float> MeanAggregator::apply(const Matrix<float>&) const;
template Matrix<double> MeanAggregator::apply(const Matrix<double>&) const;
template Matrix<float> MeanAggregator::apply_transpose(const Matrix<float>&) const;
template Matrix<double> MeanAggregator::apply_transpose(const Matrix<double>&) const;
template ForwardCache<float> forward(const BasicSageModel<float>&, const MeanAggregator&, const Matrix<float>&);
template ForwardCache<double> forward(const BasicSageModel<double>&, const MeanAggregator&, const Matrix<double>&);
template BasicSageModel<float> backward(const BasicSageModel<float>&, const MeanAggregator&,
                                        const ForwardCache<float>&, const Matrix<float>&, const Matrix<float>*);
template BasicSageModel<double> backward(const BasicSageModel<double>&, const MeanAggregator&,
                                         const ForwardCache<double>&, const Matrix<double>&,
                                         const Matrix<double>*);

}  // namespace fgv
