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

// Two-layer GraphSAGE (mean aggregator) with a linear two-class head,
// hand-written reverse pass, losses and Adam. Everything numeric is
// templated on the scalar so gradient checks can run in double while
// training runs in float.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "fgv/graph.hpp"

namespace fgv {

inline constexpr std::size_t kNumClasses = 2;
inline constexpr std::size_t kDefaultHidden = 128;

/// Mean over the union of in- and out-neighbours. Neighbour sets are
/// deduplicated and exclude the node itself; isolated nodes aggregate to 0.
class MeanAggregator {
 public:
  MeanAggregator() = default;
  explicit MeanAggregator(const TransactionGraph& graph);

  std::size_t num_nodes() const { return neighbors_.num_nodes(); }
  std::span<const NodeId> neighbors(NodeId v) const { return neighbors_.row(v); }

  /// out[v] = mean of x[u] over u in N(v).
  template <class T>
  Matrix<T> apply(const Matrix<T>& x) const;
  /// Adjoint of apply: out[u] = sum over v in N(u) of g[v] / |N(v)|.
  template <class T>
  Matrix<T> apply_transpose(const Matrix<T>& g) const;

 private:
  Csr neighbors_;
};

/// Parameters: layer1 (2d x h, 1 x h), layer2 (2h x h, 1 x h), head
/// (h x 2, 1 x 2). Weight rows [0, in) act on the node itself, rows
/// [in, 2 in) on the neighbour mean.
template <class T>
struct BasicSageModel {
  Matrix<T> w1, b1, w2, b2, w_head, b_head;

  static constexpr std::array<const char*, 6> kTensorNames = {
      "layer1.weight", "layer1.bias", "layer2.weight", "layer2.bias", "head.weight", "head.bias"};

  static BasicSageModel zeros(std::size_t in_dim, std::size_t hidden);
  /// Uniform Glorot init of the weights, zero biases.
  static BasicSageModel glorot(std::size_t in_dim, std::size_t hidden, std::uint64_t seed);

  std::size_t in_dim() const { return static_cast<std::size_t>(w1.rows() / 2); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t num_parameters() const;

  std::array<Matrix<T>*, 6> tensors() { return {&w1, &b1, &w2, &b2, &w_head, &b_head}; }
  std::array<const Matrix<T>*, 6> tensors() const { return {&w1, &b1, &w2, &b2, &w_head, &b_head}; }

  /// Concatenation of all tensors in kTensorNames order, row-major.
  std::vector<T> flatten() const;
  void unflatten(std::span<const T> values);
  bool same_shape(const BasicSageModel& other) const;

  template <class U>
  BasicSageModel<U> cast() const {
    return {w1.template cast<U>(), b1.template cast<U>(), w2.template cast<U>(),
            b2.template cast<U>(), w_head.template cast<U>(), b_head.template cast<U>()};
  }
};

using SageModel = BasicSageModel<float>;

/// Intermediate values kept for the reverse pass. `features` points at the
/// caller's matrix, which must outlive the cache.
template <class T>
struct ForwardCache {
  const Matrix<T>* features = nullptr;
  Matrix<T> agg_x;       // mean of neighbour features
  Matrix<T> pre1;        // layer-1 pre-activation
  Matrix<T> h1;          // ReLU(pre1)
  Matrix<T> agg_h1;      // mean of neighbour h1
  Matrix<T> embeddings;  // layer-2 output, fed to the head unchanged
  Matrix<T> logits;
};

template <class T>
ForwardCache<T> forward(const BasicSageModel<T>& model, const MeanAggregator& aggregator,
                        const Matrix<T>& features);

/// Gradients of a loss w.r.t. every parameter, given dL/dlogits and an
/// optional extra dL/dembeddings (the alignment term). Throws when the
/// cache is empty or shapes disagree.
template <class T>
BasicSageModel<T> backward(const BasicSageModel<T>& model, const MeanAggregator& aggregator,
                           const ForwardCache<T>& cache, const Matrix<T>& grad_logits,
                           const Matrix<T>* grad_embeddings = nullptr);

// ---------------------------------------------------------------------------
// Losses

struct ClassWeights {
  double licit = 1.0;
  double illicit = 1.0;

  double of(Label label) const { return label == Label::kIllicit ? illicit : licit; }
};

/// w_c = N / (2 N_c) over the given rows; a class with no rows gets 0.
ClassWeights inverse_frequency_weights(std::span<const Label> labels, std::span<const NodeId> rows);

template <class T>
struct LossAndGrad {
  double value = 0.0;
  Matrix<T> grad;  ///< same shape as the differentiated input
};

/// Class-weighted softmax cross-entropy over `rows` (non-empty), normalised by the sum
/// of the row weights. `labels` is indexed like the logits rows.
template <class T>
LossAndGrad<T> classification_loss(const Matrix<T>& logits, std::span<const Label> labels,
                                   std::span<const NodeId> rows, const ClassWeights& weights);

/// Mean over rows of 1 - cos(local_i, foreign_i); the gradient is w.r.t.
/// `local` only. Zero rows give a zero loss and gradient.
template <class T>
LossAndGrad<T> cosine_alignment_loss(const Matrix<T>& local, const Matrix<T>& foreign);

/// L_classify + lambda * L_boundary. Throws on negative lambda.
double total_loss(double classify, double boundary, double lambda);

// ---------------------------------------------------------------------------
// Optimiser

struct AdamConfig {
  double learning_rate = 0.01;
  double weight_decay = 5e-4;  ///< decoupled (AdamW style)
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class T>
struct BasicAdamState {
  AdamConfig config;
  BasicSageModel<T> first_moment;
  BasicSageModel<T> second_moment;
  std::uint64_t step = 0;

  static BasicAdamState for_model(const BasicSageModel<T>& model, const AdamConfig& config);
};
using AdamState = BasicAdamState<float>;

/// One Adam update of a flat tensor; `step` is the 1-based step count.
template <class T>
void adam_update(std::span<T> params, std::span<const T> grads, std::span<T> first_moment,
                 std::span<T> second_moment, std::uint64_t step, const AdamConfig& config);

template <class T>
void adam_step(BasicSageModel<T>& model, const BasicSageModel<T>& grads, BasicAdamState<T>& state);

// ---------------------------------------------------------------------------
// Embedding exchange payloads

/// Boundary embeddings of one silo for one round.
struct EmbeddingBatch {
  std::vector<std::uint64_t> node_ids;
  FeatureMatrix vectors;  ///< one row per id
  std::uint32_t round = 0;
  SiloId source_silo = 0;

  std::size_t size() const { return node_ids.size(); }
};

/// Boundary loss with rows matched on node id; unmatched ids are ignored.
/// The gradient has the shape of `local.vectors` (unmatched rows zero).
LossAndGrad<float> boundary_alignment_loss(const EmbeddingBatch& local, const EmbeddingBatch& foreign);

/// Rows of `embeddings` (indexed like `subgraph`) for the given global ids,
/// in request order. Throws InvalidArgument for ids outside the subgraph.
EmbeddingBatch gather_embeddings(const FeatureMatrix& embeddings, const Subgraph& subgraph,
                                 std::span<const NodeId> global_ids, std::uint32_t round,
                                 SiloId source_silo);

/// Runs a forward pass and returns the layer-2 embeddings of `global_ids`.
EmbeddingBatch extract_boundary_embeddings(const SageModel& model, const Subgraph& subgraph,
                                           const MeanAggregator& aggregator,
                                           std::span<const NodeId> global_ids, std::uint32_t round,
                                           SiloId source_silo);

/// u32 count, then per row: u64 id followed by width f32 values. All
/// little-endian.
constexpr std::size_t serialized_batch_size(std::size_t rows, std::size_t width) {
  return 4 + rows * (8 + 4 * width);
}
std::vector<std::uint8_t> serialize_batch(const EmbeddingBatch& batch);
/// Width is recovered from the payload length. Throws DataError when the
/// length is inconsistent with the count.
EmbeddingBatch deserialize_batch(std::span<const std::uint8_t> bytes, std::uint32_t round, SiloId source_silo);

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(std::ostream& out, const SageModel& model);
SageModel load_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const SageModel& model);
SageModel load_checkpoint(const std::filesystem::path& path);

}  // namespace fgv
