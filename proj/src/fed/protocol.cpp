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

#include <chrono>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "fgv/error.hpp"
#include "fgv/fed.hpp"

namespace fgv {

Federation make_federation(const TransactionGraph& graph, const SiloPartition& partition, const NodeMask& mask,
                           const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  if (partition.assignment().size() != graph.num_nodes()) {
    throw InvalidArgument("make_federation: partition does not cover the graph");
  }
  if (mask.roles.size() != graph.num_nodes()) throw InvalidArgument("make_federation: mask does not cover the graph");
  const std::size_t k = partition.num_silos();
  const auto init = SageModel::glorot(graph.feature_dim(), config.hidden, seed);

  Federation fed{config, seed, partition, {}, AggregationServer(init),
                 Tunnel(EntropySource::seeded(seed ^ 0x6b656d2d7475ULL)), {}, {}, {}};
  fed.clients.reserve(k);
  for (std::size_t s = 0; s < k; ++s) {
    fed.clients.emplace_back(static_cast<SiloId>(s), induced_subgraph(graph, partition.nodes(static_cast<SiloId>(s))),
                             mask.roles, init, config.adam(), fed.tunnel.entropy());
    fed.server.register_public_key(static_cast<SiloId>(s),
                                   {fed.clients.back().public_key().begin(), fed.clients.back().public_key().end()});
    fed.fedavg_weights.push_back(static_cast<double>(fed.clients.back().train_rows().size()));
  }
  if (config.mode != Mode::kLocal &&
      std::all_of(fed.fedavg_weights.begin(), fed.fedavg_weights.end(), [](double w) { return w == 0; })) {
    throw DataError("no silo has labelled training nodes");
  }

  fed.cross_neighbors.resize(graph.num_nodes());
  for (const Edge& e : partition.cross_edges()) {
    fed.cross_neighbors[e.src].push_back(e.dst);
    fed.cross_neighbors[e.dst].push_back(e.src);
  }
  for (auto& list : fed.cross_neighbors) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  fed.routes.assign(k, std::vector<std::vector<NodeId>>(k));
  std::vector<char> seen(k);
  for (std::size_t j = 0; j < k; ++j) {
    for (NodeId v : partition.boundary(static_cast<SiloId>(j))) {
      std::fill(seen.begin(), seen.end(), 0);
      for (NodeId u : fed.cross_neighbors[v]) {
        const SiloId target = partition.silo_of(u);
        if (!seen[target]) {
          seen[target] = 1;
          fed.routes[j][target].push_back(v);
        }
      }
    }
  }
  return fed;
}

RoundMetrics evaluate(const Federation& fed, std::uint32_t round) {
  RoundMetrics m;
  m.round = round;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& c : fed.clients) {
    if (c.test_rows().empty()) continue;
    const SageModel& model = fed.config.mode == Mode::kLocal ? c.model() : fed.server.global_model();
    const auto cache = forward(model, c.aggregator(), c.subgraph().graph.features());
    for (NodeId r : c.test_rows()) {
      const bool predicted = cache.logits(r, 1) > cache.logits(r, 0);
      const bool actual = c.subgraph().graph.label(r) == Label::kIllicit;
      tp += predicted && actual;
      fp += predicted && !actual;
      fn += !predicted && actual;
    }
  }
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

RoundMetrics run_round(Federation& fed, std::uint32_t round, const RoundObserver* observer) {
  if (round == 0) throw InvalidArgument("run_round: rounds are 1-based");
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = fed.config;
  const std::size_t k = fed.clients.size();
  const bool federated = cfg.mode != Mode::kLocal;
  const double lambda = cfg.mode == Mode::kFedGraph ? cfg.lambda : 0.0;

  if (federated) {
    for (auto& c : fed.clients) c.model() = fed.server.global_model();
  }

  std::vector<LocalTrainResult> trained(k);
  if (cfg.parallel_clients && k > 1) {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(k);
    for (std::size_t s = 0; s < k; ++s) {
      threads.emplace_back([&, s] {
        try {
          trained[s] = local_train(fed.clients[s], cfg.epochs, lambda);
        } catch (...) {
          errors[s] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t s = 0; s < k; ++s) trained[s] = local_train(fed.clients[s], cfg.epochs, lambda);
  }

  RoundMetrics metrics;
  const bool exchange = cfg.mode == Mode::kFedGraph && cfg.exchange && round <= cfg.exchange_last_round;
  if (exchange) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto& sender = fed.clients[j];
      bool any = false;
      for (std::size_t r = 0; r < k; ++r) any = any || (r != j && !fed.routes[j][r].empty());
      if (!any) continue;
      const auto cache = forward(sender.model(), sender.aggregator(), sender.subgraph().graph.features());
      for (std::size_t r = 0; r < k; ++r) {
        if (r == j || fed.routes[j][r].empty()) continue;
        const auto batch =
            gather_embeddings(cache.embeddings, sender.subgraph(), fed.routes[j][r], round, static_cast<SiloId>(j));
        if (observer && observer->on_extract) observer->on_extract(batch, static_cast<SiloId>(r));
        const auto env = fed.tunnel.seal(fed.server.public_key(static_cast<SiloId>(r)), batch,
                                         static_cast<SiloId>(j), static_cast<SiloId>(r), round);
        metrics.bytes_embed += env.payload_bytes();
        metrics.bytes_overhead += env.wire_bytes() - env.payload_bytes();
        metrics.embedding_rows += batch.size();
        ++metrics.envelopes;
        fed.server.submit(env.to_bytes());
      }
    }
  }

  if (federated) {
    std::vector<SageModel> uploads;
    uploads.reserve(k);
    for (const auto& c : fed.clients) uploads.push_back(c.model());
    fed.server.aggregate(uploads, fed.fedavg_weights);
    metrics.bytes_model = fed.server.global_model().num_parameters() * sizeof(float) * k;
  }

  if (exchange) {
    const auto width = static_cast<Eigen::Index>(cfg.hidden);
    for (std::size_t r = 0; r < k; ++r) {
      auto& client = fed.clients[r];
      std::map<NodeId, std::vector<float>> received;
      for (const auto& wire : fed.server.collect(static_cast<SiloId>(r))) {
        try {
          const auto env = SecureEnvelope::from_bytes(wire);
          if (env.recipient != r) throw AuthenticationError("misrouted envelope");
          const auto batch = decrypt_batch(client.secret_key(), env);
          if (batch.size() > 0 && batch.vectors.cols() != width) throw AuthenticationError("embedding width mismatch");
          for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto row = batch.vectors.row(static_cast<Eigen::Index>(i));
            received[static_cast<NodeId>(batch.node_ids[i])].assign(row.data(), row.data() + width);
          }
        } catch (const AuthenticationError&) {
          ++metrics.dropped_envelopes;
        }
      }
      if (received.empty()) continue;
      for (NodeId a : fed.partition.boundary(static_cast<SiloId>(r))) {
        std::vector<double> sum(static_cast<std::size_t>(width), 0.0);
        std::size_t count = 0;
        for (NodeId u : fed.cross_neighbors[a]) {
          const auto it = received.find(u);
          if (it == received.end()) continue;
          for (Eigen::Index c = 0; c < width; ++c) sum[c] += it->second[c];
          ++count;
        }
        if (count == 0) continue;
        BufferEntry entry;
        entry.round = round;
        entry.vector.resize(sum.size());
        for (std::size_t c = 0; c < sum.size(); ++c) entry.vector[c] = static_cast<float>(sum[c] / count);
        client.buffer()[a] = std::move(entry);
      }
    }
  }

  auto eval = evaluate(fed, round);
  metrics.f1 = eval.f1;
  metrics.precision = eval.precision;
  metrics.recall = eval.recall;
  metrics.round = round;
  double weight_sum = 0;
  for (std::size_t s = 0; s < k; ++s) {
    if (trained[s].no_labels) metrics.silos_without_labels.push_back(static_cast<SiloId>(s));
    if (trained[s].epochs.empty()) continue;
    const auto& last = trained[s].epochs.back();
    metrics.loss_cls += fed.fedavg_weights[s] * last.classify;
    weight_sum += fed.fedavg_weights[s];
    metrics.loss_bnd += last.boundary / static_cast<double>(k);
  }
  if (weight_sum > 0) metrics.loss_cls /= weight_sum;
  metrics.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return metrics;
}

SageModel centralized_train(const TransactionGraph& graph, const NodeMask& mask, const ExperimentConfig& config,
                            std::uint64_t seed) {
  auto model = SageModel::glorot(graph.feature_dim(), config.hidden, seed);
  auto state = AdamState::for_model(model, config.adam());
  const MeanAggregator agg(graph);
  const auto rows = mask.nodes_with(NodeRole::kTrain);
  if (rows.empty()) throw DataError("centralized_train: no training nodes");
  const auto weights = inverse_frequency_weights(graph.labels(), rows);
  for (std::size_t step = 0; step < config.rounds * config.epochs; ++step) {
    const auto cache = forward(model, agg, graph.features());
    const auto loss = classification_loss(cache.logits, graph.labels(), rows, weights);
    adam_step(model, backward(model, agg, cache, loss.grad), state);
  }
  return model;
}

namespace {

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  for (double x : xs) out.std += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(out.std / static_cast<double>(xs.size()));
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const TransactionGraph& graph,
                                const SiloPartition& partition) {
  config.validate();
  if (partition.num_silos() != config.num_silos) {
    throw ConfigError(fmt::format("partition has {} silos but k = {}", partition.num_silos(), config.num_silos));
  }
  const auto mask = make_split(graph, config.split_rule());
  const auto normalized = graph.with_features(zscore_normalize(graph.features(), mask));

  ExperimentResult result;
  result.config = config;
  result.cross_edge_fraction = cross_edge_fraction(partition, graph);
  result.silo_sizes = partition.silo_sizes();
  for (std::size_t s = 0; s < partition.num_silos(); ++s) {
    result.boundary_sizes.push_back(partition.boundary(static_cast<SiloId>(s)).size());
  }
  std::vector<double> f1, precision, recall;
  for (std::uint64_t seed : config.seeds) {
    auto fed = make_federation(normalized, partition, mask, config, seed);
    SeedRun run;
    run.seed = seed;
    run.rounds.push_back(evaluate(fed, 0));
    for (std::size_t t = 1; t <= config.rounds; ++t) run.rounds.push_back(run_round(fed, static_cast<std::uint32_t>(t)));
    run.final_model = config.mode == Mode::kLocal ? fed.clients.front().model() : fed.server.global_model();
    f1.push_back(run.rounds.back().f1);
    precision.push_back(run.rounds.back().precision);
    recall.push_back(run.rounds.back().recall);
    result.runs.push_back(std::move(run));
  }
  result.f1 = mean_std(f1);
  result.precision = mean_std(precision);
  result.recall = mean_std(recall);
  return result;
}

}  // namespace fgv
