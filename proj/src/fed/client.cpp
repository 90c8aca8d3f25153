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

#include <fmt/format.h>

#include "fgv/error.hpp"
#include "fgv/fed.hpp"

namespace fgv {

SageModel fedavg(std::span<const SageModel> models, std::span<const double> weights) {
  if (models.empty()) throw InvalidArgument("fedavg: no models");
  if (weights.size() != models.size()) throw InvalidArgument("fedavg: one weight per model required");
  double total = 0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw InvalidArgument("fedavg: weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0)) throw InvalidArgument("fedavg: weights are all zero");
  for (const auto& m : models) {
    if (!m.same_shape(models[0])) throw ShapeError("fedavg: model shapes differ");
  }
  std::vector<double> acc(models[0].num_parameters(), 0.0);
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (weights[k] == 0) continue;
    const auto flat = models[k].flatten();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weights[k] * static_cast<double>(flat[i]);
  }
  std::vector<float> mean(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) mean[i] = static_cast<float>(acc[i] / total);
  SageModel out = models[0];
  out.unflatten(mean);
  return out;
}

SiloClient::SiloClient(SiloId id, Subgraph subgraph, std::span<const NodeRole> global_roles,
                       const SageModel& initial, const AdamConfig& adam, EntropySource& entropy)
    : id_(id),
      subgraph_(std::move(subgraph)),
      aggregator_(subgraph_.graph),
      model_(initial),
      optimizer_(AdamState::for_model(initial, adam)),
      keys_(kem_keygen(entropy)) {
  for (NodeId local = 0; local < subgraph_.global_ids.size(); ++local) {
    const NodeId g = subgraph_.global_ids[local];
    if (g >= global_roles.size()) throw InvalidArgument("SiloClient: mask does not cover the graph");
    if (global_roles[g] == NodeRole::kTrain) train_rows_.push_back(local);
    if (global_roles[g] == NodeRole::kTest) test_rows_.push_back(local);
  }
  weights_ = inverse_frequency_weights(subgraph_.graph.labels(), train_rows_);
}

LocalTrainResult local_train(SiloClient& client, std::size_t epochs, double lambda) {
  if (lambda < 0) throw InvalidArgument("local_train: lambda must be non-negative");
  const auto& graph = client.subgraph().graph;
  const auto& x = graph.features();
  auto& model = client.model();
  const auto width = static_cast<Eigen::Index>(model.hidden());

  std::vector<NodeId> aligned;
  FeatureMatrix foreign(static_cast<Eigen::Index>(client.buffer().size()), width);
  for (const auto& [global, entry] : client.buffer()) {
    const auto local = client.subgraph().local_of(global);
    if (local < 0) throw InvalidArgument(fmt::format("local_train: buffered node {} is not in silo", global));
    if (static_cast<Eigen::Index>(entry.vector.size()) != width) {
      throw ShapeError("local_train: buffered embedding has the wrong width");
    }
    foreign.row(static_cast<Eigen::Index>(aligned.size())) =
        Eigen::Map<const Eigen::RowVectorXf>(entry.vector.data(), width);
    aligned.push_back(static_cast<NodeId>(local));
  }

  LocalTrainResult result;
  result.no_labels = client.train_rows().empty();
  const bool align_grad = lambda > 0 && !aligned.empty();
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const auto cache = forward(model, client.aggregator(), x);
    EpochLoss loss;
    FeatureMatrix grad_logits = FeatureMatrix::Zero(cache.logits.rows(), cache.logits.cols());
    if (!result.no_labels) {
      auto cls = classification_loss(cache.logits, graph.labels(), client.train_rows(), client.class_weights());
      loss.classify = cls.value;
      grad_logits = std::move(cls.grad);
    }
    FeatureMatrix grad_emb;
    if (!aligned.empty()) {
      FeatureMatrix local(static_cast<Eigen::Index>(aligned.size()), width);
      for (std::size_t i = 0; i < aligned.size(); ++i) local.row(static_cast<Eigen::Index>(i)) = cache.embeddings.row(aligned[i]);
      const auto bnd = cosine_alignment_loss(local, foreign);
      loss.boundary = bnd.value;
      if (align_grad) {
        grad_emb = FeatureMatrix::Zero(cache.embeddings.rows(), width);
        const auto scale = static_cast<float>(lambda);
        for (std::size_t i = 0; i < aligned.size(); ++i) {
          grad_emb.row(aligned[i]) += scale * bnd.grad.row(static_cast<Eigen::Index>(i));
        }
      }
    }
    loss.total = align_grad ? total_loss(loss.classify, loss.boundary, lambda) : loss.classify;
    result.epochs.push_back(loss);
    if (result.no_labels && !align_grad) continue;
    const auto grads = backward(model, client.aggregator(), cache, grad_logits, align_grad ? &grad_emb : nullptr);
    adam_step(model, grads, client.optimizer());
  }
  return result;
}

void AggregationServer::register_public_key(SiloId silo, std::vector<std::uint8_t> public_key) {
  if (public_key.size() != kPublicKeyBytes) throw CryptoError("public key must be 800 bytes");
  keys_[silo] = std::move(public_key);
}

std::span<const std::uint8_t> AggregationServer::public_key(SiloId silo) const {
  const auto it = keys_.find(silo);
  if (it == keys_.end()) throw InvalidArgument(fmt::format("no public key registered for silo {}", silo));
  return it->second;
}

void AggregationServer::aggregate(std::span<const SageModel> uploads, std::span<const double> weights) {
  if (archive_on_) {
    for (const auto& m : uploads) {
      const auto flat = m.flatten();
      const auto* p = reinterpret_cast<const std::uint8_t*>(flat.data());
      archive_.emplace_back(p, p + flat.size() * sizeof(float));
    }
  }
  global_ = fedavg(uploads, weights);
}

void AggregationServer::submit(std::vector<std::uint8_t> wire) {
  if (wire.size() < kAssociatedDataBytes) throw InvalidArgument("submit: envelope shorter than its header");
  const auto recipient = static_cast<SiloId>(wire[6] | (wire[7] << 8));
  if (archive_on_) archive_.push_back(wire);
  queue_.emplace_back(recipient, std::move(wire));
}

std::vector<std::vector<std::uint8_t>> AggregationServer::collect(SiloId recipient) {
  std::vector<std::vector<std::uint8_t>> out;
  auto keep = queue_.begin();
  for (auto it = queue_.begin(); it != queue_.end(); ++it) {
    if (it->first == recipient) {
      if (tamper_) tamper_(it->second);
      out.push_back(std::move(it->second));
    } else {
      if (keep != it) *keep = std::move(*it);
      ++keep;
    }
  }
  queue_.erase(keep, queue_.end());
  return out;
}

SecureEnvelope Tunnel::seal(std::span<const std::uint8_t> recipient_pk, const EmbeddingBatch& batch, SiloId sender,
                            SiloId recipient, std::uint32_t round) {
  auto env = encrypt_batch(recipient_pk, batch, sender, recipient, round, entropy_);
  log_.record(env, batch.size());
  return env;
}

}  // namespace fgv
