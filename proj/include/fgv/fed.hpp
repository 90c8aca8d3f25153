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

// Federated training over silos: local training with the boundary
// alignment term, FedAvg, encrypted boundary-embedding exchange routed by
// cross-edge incidence, and the Local-GNN / FedAvg baselines.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fgv/crypto.hpp"
#include "fgv/gnn.hpp"
#include "fgv/partition.hpp"

namespace fgv {

enum class Mode { kLocal, kFedAvg, kFedGraph };
enum class PartitionMethod { kLouvain, kEdgeCut, kFile };

std::string to_string(Mode mode);
Mode parse_mode(std::string_view text);
std::string to_string(PartitionMethod method);
PartitionMethod parse_partition_method(std::string_view text);

struct ExperimentConfig {
  std::size_t rounds = 50;
  std::size_t epochs = 3;
  double lambda = 0.1;
  std::size_t num_silos = 3;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  std::size_t hidden = kDefaultHidden;
  std::vector<std::uint64_t> seeds = {42, 123, 456, 789, 2024};
  PartitionMethod partition = PartitionMethod::kLouvain;
  std::string partition_file;
  double resolution = 1.0;
  Mode mode = Mode::kFedGraph;

  /// "temporal" (train steps <= last_train_step) or "random".
  std::string split = "temporal";
  std::int32_t last_train_step = 34;
  double train_fraction = 0.7;
  std::uint64_t split_seed = 42;

  /// fedgraph only: when false no envelopes are ever created.
  bool exchange = true;
  /// Exchange happens in rounds 1..exchange_last_round only.
  std::size_t exchange_last_round = std::numeric_limits<std::size_t>::max();
  bool parallel_clients = false;

  AdamConfig adam() const;
  SplitRule split_rule() const;
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Applies one `key = value` setting; throws ConfigError for unknown keys or
/// unparsable values.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);
/// Flat key-value text: `key = value` per line, `#` comments, blank lines.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
/// Every field as (key, value) in a stable order, readable by parse_config.
std::vector<std::pair<std::string, std::string>> config_items(const ExperimentConfig& config);

/// Parameter-wise weighted mean, accumulated in double. Weights are
/// normalised to sum to one.
SageModel fedavg(std::span<const SageModel> models, std::span<const double> weights);

struct BufferEntry {
  std::vector<float> vector;
  std::uint32_t round = 0;  ///< round the embedding was produced and delivered in
};

/// One institution: its subgraph, masks, model, optimiser state, key pair and
/// boundary buffer. Buffer keys are global ids of this silo's boundary nodes.
class SiloClient {
 public:
  SiloClient(SiloId id, Subgraph subgraph, std::span<const NodeRole> global_roles, const SageModel& initial,
             const AdamConfig& adam, EntropySource& entropy);

  SiloId id() const { return id_; }
  const Subgraph& subgraph() const { return subgraph_; }
  const MeanAggregator& aggregator() const { return aggregator_; }
  std::span<const NodeId> train_rows() const { return train_rows_; }  ///< local indices
  std::span<const NodeId> test_rows() const { return test_rows_; }
  const ClassWeights& class_weights() const { return weights_; }

  SageModel& model() { return model_; }
  const SageModel& model() const { return model_; }
  AdamState& optimizer() { return optimizer_; }

  std::span<const std::uint8_t> public_key() const { return keys_.public_key; }
  std::span<const std::uint8_t> secret_key() const { return keys_.secret_key.view(); }

  std::map<NodeId, BufferEntry>& buffer() { return buffer_; }
  const std::map<NodeId, BufferEntry>& buffer() const { return buffer_; }

 private:
  SiloId id_;
  Subgraph subgraph_;
  MeanAggregator aggregator_;
  std::vector<NodeId> train_rows_;
  std::vector<NodeId> test_rows_;
  ClassWeights weights_;
  SageModel model_;
  AdamState optimizer_;
  KemKeyPair keys_;
  std::map<NodeId, BufferEntry> buffer_;
};

struct EpochLoss {
  double classify = 0;
  double boundary = 0;
  double total = 0;
};

struct LocalTrainResult {
  std::vector<EpochLoss> epochs;
  bool no_labels = false;  ///< silo had no labelled training nodes
};

/// E full-subgraph Adam steps on classify + lambda * boundary. The boundary
/// term uses the buffer; with an empty buffer or lambda = 0 it adds nothing
/// to the gradient.
LocalTrainResult local_train(SiloClient& client, std::size_t epochs, double lambda);

/// Holds public keys, the global model and the envelope queue. Stores only
/// wire bytes; it never sees a secret key.
class AggregationServer {
 public:
  explicit AggregationServer(SageModel initial) : global_(std::move(initial)) {}

  void register_public_key(SiloId silo, std::vector<std::uint8_t> public_key);
  std::span<const std::uint8_t> public_key(SiloId silo) const;

  const SageModel& global_model() const { return global_; }
  void aggregate(std::span<const SageModel> uploads, std::span<const double> weights);

  /// Queues an envelope for its recipient (read from the plaintext header).
  void submit(std::vector<std::uint8_t> wire);
  /// Removes and returns every queued envelope addressed to `recipient`.
  std::vector<std::vector<std::uint8_t>> collect(SiloId recipient);
  std::size_t queued() const { return queue_.size(); }

  /// Instrumentation: keep a copy of every byte string the server handled.
  void enable_archive(bool on) { archive_on_ = on; }
  std::span<const std::vector<std::uint8_t>> archive() const { return archive_; }
  /// Fault injection: mutate envelopes between submit and delivery.
  void set_tamper_hook(std::function<void(std::vector<std::uint8_t>&)> hook) { tamper_ = std::move(hook); }

 private:
  SageModel global_;
  std::map<SiloId, std::vector<std::uint8_t>> keys_;
  std::vector<std::pair<SiloId, std::vector<std::uint8_t>>> queue_;
  bool archive_on_ = false;
  std::vector<std::vector<std::uint8_t>> archive_;
  std::function<void(std::vector<std::uint8_t>&)> tamper_;
};

/// Sender side of the channel: sealing plus the session envelope log.
class Tunnel {
 public:
  explicit Tunnel(EntropySource entropy) : entropy_(std::move(entropy)) {}

  SecureEnvelope seal(std::span<const std::uint8_t> recipient_pk, const EmbeddingBatch& batch, SiloId sender,
                      SiloId recipient, std::uint32_t round);
  EntropySource& entropy() { return entropy_; }
  const EnvelopeLog& log() const { return log_; }

 private:
  EntropySource entropy_;
  EnvelopeLog log_;
};

struct RoundMetrics {
  std::uint32_t round = 0;
  double f1 = 0, precision = 0, recall = 0;
  double loss_cls = 0, loss_bnd = 0;
  std::size_t bytes_model = 0;     ///< parameter uploads
  std::size_t bytes_embed = 0;     ///< plaintext embedding payloads
  std::size_t bytes_overhead = 0;  ///< envelope framing, KEM ciphertext and tags
  std::size_t envelopes = 0;
  std::size_t dropped_envelopes = 0;
  std::size_t embedding_rows = 0;
  std::vector<SiloId> silos_without_labels;
  double wall_ms = 0;
};

/// All state of one seeded run.
struct Federation {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  SiloPartition partition;
  std::vector<SiloClient> clients;
  AggregationServer server;
  Tunnel tunnel;
  /// routes[j][k]: global ids in B_j with a neighbour in silo k, ascending.
  std::vector<std::vector<std::vector<NodeId>>> routes;
  /// Cross-silo neighbours of every node (global ids, deduplicated).
  std::vector<std::vector<NodeId>> cross_neighbors;
  std::vector<double> fedavg_weights;
};

/// `graph` should already carry normalised features. Every client starts
/// from the same Glorot init drawn from `seed`.
Federation make_federation(const TransactionGraph& graph, const SiloPartition& partition, const NodeMask& mask,
                           const ExperimentConfig& config, std::uint64_t seed);

/// Test hook: sees every batch right after extraction, before encryption.
struct RoundObserver {
  std::function<void(const EmbeddingBatch& batch, SiloId recipient)> on_extract;
};

/// One protocol round t >= 1: broadcast, local training, extraction and
/// sealing, upload, FedAvg, routing, decryption, buffer update. Envelopes
/// failing authentication are dropped and counted.
RoundMetrics run_round(Federation& fed, std::uint32_t round, const RoundObserver* observer = nullptr);

/// Pooled test metrics (illicit = positive) with the global model, or each
/// silo's own model in local mode.
RoundMetrics evaluate(const Federation& fed, std::uint32_t round);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<RoundMetrics> rounds;  ///< round 0 (initial model) through R
  SageModel final_model;
};

struct MeanStd {
  double mean = 0;
  double std = 0;  ///< population standard deviation across seeds
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SeedRun> runs;
  MeanStd f1, precision, recall;
  double cross_edge_fraction = 0;
  std::vector<std::size_t> silo_sizes;
  std::vector<std::size_t> boundary_sizes;
};

/// Splits and normalises the graph per the config, then runs every seed.
ExperimentResult run_experiment(const ExperimentConfig& config, const TransactionGraph& graph,
                                const SiloPartition& partition);

/// Single model on the whole graph for rounds x epochs Adam steps.
SageModel centralized_train(const TransactionGraph& graph, const NodeMask& mask, const ExperimentConfig& config,
                            std::uint64_t seed);

struct CommRow {
  std::string label;
  std::size_t bytes = 0;
};
/// Rows: model parameters, boundary embeddings, PQC ciphertext overhead,
/// total per round.
std::vector<CommRow> comm_accounting(const RoundMetrics& round);
std::string format_comm_table(std::span<const CommRow> rows);

void write_metrics_csv(std::ostream& out, std::span<const SeedRun> runs, Mode mode, bool header = true);
std::string summary_json(const ExperimentResult& result);

}  // namespace fgv
