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

// fgv: command-line driver for ingestion, partitioning, federated training,
// privacy audits and the PQC benchmark.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "fgv/audit.hpp"
#include "fgv/crypto.hpp"
#include "fgv/error.hpp"
#include "fgv/fed.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

// ---------------------------------------------------------------------------
// Graph and partition sources

struct GraphSource {
  std::string graph_file;
  std::string elliptic_dir;

  void add_options(CLI::App& cmd) {
    cmd.add_option("--graph", graph_file, "Graph text file written by `ingest` or `synth`");
    cmd.add_option("--elliptic", elliptic_dir, "Directory with the Elliptic CSV files (default: $FGV_DATA_DIR)");
  }

  /// Input files the graph was read from, for the manifest.
  std::vector<fs::path> files() const {
    if (!graph_file.empty()) return {graph_file};
    const auto p = fgv::EllipticPaths::in_directory(resolve_elliptic());
    return {p.features, p.classes, p.edgelist};
  }

  fgv::TransactionGraph load() const {
    if (!graph_file.empty() && !elliptic_dir.empty()) throw fgv::ConfigError("--graph and --elliptic are exclusive");
    if (!graph_file.empty()) return fgv::read_graph_text(graph_file);
    return fgv::load_elliptic(fgv::EllipticPaths::in_directory(resolve_elliptic()));
  }

 private:
  fs::path resolve_elliptic() const {
    fs::path root = elliptic_dir;
    if (root.empty()) {
      const char* env = std::getenv("FGV_DATA_DIR");
      if (env == nullptr || *env == '\0') {
        throw fgv::ConfigError("no graph given: pass --graph, --elliptic or set FGV_DATA_DIR");
      }
      root = env;
    }
    for (const fs::path& dir : {root, root / "elliptic_bitcoin_dataset", root / "elliptic"}) {
      if (fs::exists(fgv::EllipticPaths::in_directory(dir).features)) return dir;
    }
    throw fgv::DataError(fmt::format("no elliptic_txs_features.csv under {}", root.string()));
  }
};

fgv::SiloPartition make_partition(const fgv::TransactionGraph& graph, fgv::PartitionMethod method, std::size_t k,
                                  const std::string& file, double resolution, std::uint64_t seed) {
  if (!file.empty() || method == fgv::PartitionMethod::kFile) {
    if (file.empty()) throw fgv::ConfigError("partition method `file` needs a partition file");
    return fgv::read_partition_file(file, graph, k);
  }
  if (k == 0) throw fgv::ConfigError("--k must be positive");
  if (method == fgv::PartitionMethod::kEdgeCut) return fgv::balanced_edgecut(graph, k, seed);
  fgv::LouvainOptions opts;
  opts.resolution = resolution;
  opts.seed = seed;
  return fgv::communities_to_silos(graph, fgv::louvain(graph, opts), k);
}

json partition_stats(const fgv::SiloPartition& p, const fgv::TransactionGraph& graph) {
  std::vector<std::size_t> boundary;
  for (fgv::SiloId k = 0; k < p.num_silos(); ++k) boundary.push_back(p.boundary(k).size());
  return {{"k", p.num_silos()},
          {"silo_sizes", p.silo_sizes()},
          {"boundary_sizes", boundary},
          {"cross_edges", p.cross_edges().size()},
          {"edges", graph.num_edges()},
          {"cross_edge_fraction", fgv::cross_edge_fraction(p, graph)}};
}

void print_partition_stats(const json& s) {
  fmt::print("k                    {}\n", s["k"].get<std::size_t>());
  fmt::print("silo sizes           {}\n", fmt::join(s["silo_sizes"].get<std::vector<std::size_t>>(), " "));
  fmt::print("boundary nodes       {}\n", fmt::join(s["boundary_sizes"].get<std::vector<std::size_t>>(), " "));
  fmt::print("cross edges          {} / {}\n", s["cross_edges"].get<std::size_t>(), s["edges"].get<std::size_t>());
  const double f = s["cross_edge_fraction"].get<double>();
  fmt::print("cross-edge fraction  {:.6f} ({:.4f}%)\n", f, 100 * f);
}

// ---------------------------------------------------------------------------
// Manifest helpers

/// Hash git assigns to a blob with these contents: SHA-1 of "blob <len>\0" + data.
std::string git_blob_sha1(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fgv::DataError(fmt::format("cannot open {}", path.string()));
  const auto size = fs::file_size(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1) throw fgv::CryptoError("SHA-1 unavailable");
  const std::string header = fmt::format("blob {}", size);
  EVP_DigestUpdate(ctx.get(), header.data(), header.size() + 1);  // includes the NUL
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

json input_hashes(const std::vector<fs::path>& files) {
  json out = json::array();
  for (const auto& f : files) out.push_back({{"path", f.string()}, {"git_blob_sha1", git_blob_sha1(f)}});
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fgv::DataError(fmt::format("cannot write {}", path.string()));
  out << text;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Experiment settings shared by train and audit

struct ConfigFlags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::string seeds, mode, partition_file;
  std::optional<std::string> rounds, epochs, lambda, k;

  void add_options(CLI::App& cmd) {
    cmd.add_option("--config", config_file, "Key-value config file");
    cmd.add_option("--seed", seed, "Run a single seed");
    cmd.add_option("--seeds", seeds, "Comma-separated seeds");
    cmd.add_option("--mode", mode, "local, fedavg or fedgraph");
    cmd.add_option("--rounds", rounds, "Federated rounds");
    cmd.add_option("--epochs", epochs, "Local epochs per round");
    cmd.add_option("--lambda", lambda, "Boundary alignment weight");
    cmd.add_option("--k", k, "Number of silos");
    cmd.add_option("--partition-file", partition_file, "Node-to-silo assignment file");
  }

  fgv::ExperimentConfig resolve() const {
    fgv::ExperimentConfig c = config_file.empty() ? fgv::ExperimentConfig{} : fgv::load_config(config_file);
    if (seed) c.seeds = {*seed};
    if (!seeds.empty()) fgv::set_config_value(c, "seeds", seeds);
    if (!mode.empty()) fgv::set_config_value(c, "mode", mode);
    if (rounds) fgv::set_config_value(c, "rounds", *rounds);
    if (epochs) fgv::set_config_value(c, "epochs", *epochs);
    if (lambda) fgv::set_config_value(c, "lambda", *lambda);
    if (k) fgv::set_config_value(c, "k", *k);
    if (!partition_file.empty()) {
      c.partition_file = partition_file;
      c.partition = fgv::PartitionMethod::kFile;
    }
    c.validate();
    return c;
  }
};

/// Split and training-statistics z-score, as run_experiment applies them.
struct Prepared {
  fgv::TransactionGraph graph;
  fgv::NodeMask mask;
};
Prepared prepare(const fgv::TransactionGraph& raw, const fgv::ExperimentConfig& c) {
  auto mask = fgv::make_split(raw, c.split_rule());
  return {raw.with_features(fgv::zscore_normalize(raw.features(), mask)), std::move(mask)};
}

// ---------------------------------------------------------------------------
// Subcommands

struct SynthArgs {
  fgv::SyntheticSpec spec;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  const auto s = fgv::generate_synthetic(a.spec);
  fgv::write_graph_text(a.out, s.graph);
  fmt::print("wrote {} nodes, {} edges to {}\n", s.graph.num_nodes(), s.graph.num_edges(), a.out);
  return kOk;
}

struct IngestArgs {
  GraphSource source;
  std::string table, label_column = "FLAG", out;
  std::vector<std::string> drop;
  std::size_t knn = 5;
};

int cmd_ingest(const IngestArgs& a) {
  fgv::TransactionGraph g;
  if (!a.table.empty()) {
    const auto t = fgv::load_labeled_table(a.table, a.label_column, a.drop);
    g = fgv::build_knn_graph(t.features, a.knn, fgv::DistanceMetric::kEuclidean, t.labels);
  } else {
    g = a.source.load();
  }
  fgv::write_graph_text(a.out, g);
  const auto c = g.label_counts();
  fmt::print("nodes {} edges {} features {} illicit {} licit {} unknown {}\n", g.num_nodes(), g.num_edges(),
             g.feature_dim(), c.illicit, c.licit, c.unknown);
  return kOk;
}

struct PartitionArgs {
  GraphSource source;
  std::string method = "louvain", in, out, stats_json;
  std::size_t k = 3;
  std::uint64_t seed = 42;
  double resolution = 1.0;
};

int cmd_partition(const PartitionArgs& a) {
  const auto graph = a.source.load();
  const auto method = fgv::parse_partition_method(a.method);
  if (method == fgv::PartitionMethod::kFile && a.in.empty()) throw fgv::ConfigError("--method file needs --in");
  const auto p = make_partition(graph, method, method == fgv::PartitionMethod::kFile ? 0 : a.k,
                                method == fgv::PartitionMethod::kFile ? a.in : std::string{}, a.resolution, a.seed);
  const auto stats = partition_stats(p, graph);
  print_partition_stats(stats);
  if (!a.out.empty()) fgv::write_partition_file(a.out, p);
  if (!a.stats_json.empty()) write_text(a.stats_json, stats.dump(2) + "\n");
  return kOk;
}

struct TrainArgs {
  GraphSource source;
  ConfigFlags flags;
  std::string out_dir = "fgv-out";
  std::uint64_t partition_seed = 42;
};

int cmd_train(const TrainArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = a.flags.resolve();
  const auto graph = a.source.load();
  const auto partition =
      make_partition(graph, cfg.partition, cfg.num_silos, cfg.partition_file, cfg.resolution, a.partition_seed);

  const auto result = fgv::run_experiment(cfg, graph, partition);

  const fs::path dir = a.out_dir;
  fs::create_directories(dir / "checkpoints");
  {
    std::ofstream csv(dir / "metrics.csv", std::ios::binary);
    fgv::write_metrics_csv(csv, result.runs, cfg.mode);
  }
  write_text(dir / "summary.json", fgv::summary_json(result) + "\n");
  json checkpoints = json::object();
  json timings = json::object();
  for (const auto& run : result.runs) {
    const auto path = dir / "checkpoints" / fmt::format("seed_{}.ckpt", run.seed);
    fgv::save_checkpoint(path, run.final_model);
    checkpoints[std::to_string(run.seed)] = path.string();
    double ms = 0;
    for (const auto& r : run.rounds) ms += r.wall_ms;
    timings[std::to_string(run.seed)] = ms / 1000.0;
  }

  std::vector<fs::path> inputs = a.source.files();
  if (!a.flags.config_file.empty()) inputs.emplace_back(a.flags.config_file);
  if (!cfg.partition_file.empty()) inputs.emplace_back(cfg.partition_file);
  json config = json::object();
  for (const auto& [key, value] : fgv::config_items(cfg)) config[key] = value;
  json manifest = {{"command", "train"},
                   {"config", config},
                   {"partition_seed", a.partition_seed},
                   {"inputs", input_hashes(inputs)},
                   {"outputs",
                    {{"metrics_csv", (dir / "metrics.csv").string()},
                     {"summary_json", (dir / "summary.json").string()},
                     {"checkpoints", checkpoints}}},
                   {"timings_s", {{"per_seed", timings}, {"total", seconds_since(start)}}}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  fmt::print("mode {} seeds {} rounds {} cross-edge fraction {:.6f}\n", fgv::to_string(cfg.mode),
             result.runs.size(), cfg.rounds, result.cross_edge_fraction);
  fmt::print("F1 {:.4f} +- {:.4f}  precision {:.4f}  recall {:.4f}\n", result.f1.mean, result.f1.std,
             result.precision.mean, result.recall.mean);
  if (!result.runs.empty() && result.runs.front().rounds.size() > 1) {
    fmt::print("{}", fgv::format_comm_table(fgv::comm_accounting(result.runs.front().rounds.back())));
  }
  fmt::print("outputs in {}\n", dir.string());
  return kOk;
}

struct AuditArgs {
  GraphSource source;
  ConfigFlags flags;
  std::string checkpoint, attack = "all", out;
  std::uint64_t partition_seed = 42;
  std::uint64_t seed = 42;
  std::size_t attacker_epochs = 200, shadow_epochs = 200, shadows = 1;
};

int cmd_audit(const AuditArgs& a) {
  if (a.attack != "inversion" && a.attack != "mia" && a.attack != "all") {
    throw fgv::ConfigError(fmt::format("unknown attack `{}` (inversion, mia, all)", a.attack));
  }
  const auto cfg = a.flags.resolve();
  const auto model = fgv::load_checkpoint(fs::path(a.checkpoint));
  const auto raw = a.source.load();
  const auto prep = prepare(raw, cfg);

  json report = {{"checkpoint", a.checkpoint}, {"inputs", input_hashes(a.source.files())}};
  if (a.attack != "mia") {
    const auto partition =
        make_partition(raw, cfg.partition, cfg.num_silos, cfg.partition_file, cfg.resolution, a.partition_seed);
    const auto pairs = fgv::boundary_embedding_pairs(model, prep.graph, partition);
    fgv::RegressorSpec spec;
    spec.epochs = a.attacker_epochs;
    spec.seed = a.seed;
    auto inv = json::parse(fgv::to_json(fgv::inversion_attack(pairs.embeddings, pairs.features, spec)));
    inv["embedding_source"] = "boundary nodes of every silo, checkpoint model on the silo subgraph";
    inv["partition"] = partition_stats(partition, raw);
    report["inversion"] = inv;
    fmt::print("inversion: R2 {:.4f} MSE {:.4f} mean Pearson {:.4f} on {} rows\n", inv["r2"].get<double>(),
               inv["mse"].get<double>(), inv["pearson_mean"].get<double>(), pairs.nodes.size());
  }
  if (a.attack != "inversion") {
    fgv::MembershipConfig mc;
    mc.num_shadows = a.shadows;
    mc.shadow_epochs = a.shadow_epochs;
    mc.seed = a.seed;
    const auto members = prep.mask.nodes_with(fgv::NodeRole::kTrain);
    const auto nonmembers = prep.mask.nodes_with(fgv::NodeRole::kTest);
    const auto mia = fgv::membership_inference(prep.graph, model, members, nonmembers, mc);
    report["membership_inference"] = json::parse(fgv::to_json(mia));
    fmt::print("membership inference: AUC {:.4f} ({} members vs {} non-members)\n", mia.auc, mia.eval_members,
               mia.eval_nonmembers);
  }
  json config = json::object();
  for (const auto& [key, value] : fgv::config_items(cfg)) config[key] = value;
  report["config"] = config;
  if (a.out.empty()) {
    fmt::print("{}\n", report.dump(2));
  } else {
    write_text(a.out, report.dump(2) + "\n");
  }
  return kOk;
}

struct BenchArgs {
  std::vector<std::size_t> sizes = {1, 10, 100, 1000, 5000};
  fgv::OverheadOptions options;
  std::string out;
};

int cmd_bench_pqc(const BenchArgs& a) {
  const auto rows = fgv::measure_overhead(a.sizes, a.options);
  std::string csv = "batch_size,total_ms,per_embedding_ms,embeddings_per_sec,expansion_ratio,payload_bytes,envelope_bytes\n";
  for (const auto& r : rows) {
    csv += fmt::format("{},{:.6f},{:.6f},{:.3f},{:.6f},{},{}\n", r.batch_size, r.total_ms, r.per_embedding_ms,
                       r.embeddings_per_sec, r.expansion_ratio, r.payload_bytes, r.envelope_bytes);
  }
  if (a.out.empty()) {
    fmt::print("{}", csv);
  } else {
    write_text(a.out, csv);
  }
  return kOk;
}

int report_error(const char* kind, const std::exception& e, int code) {
  fmt::print(stderr, "fgv: {}: {}\n", kind, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated graph learning over partitioned transaction graphs"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a stochastic block model graph");
  c_synth->add_option("--communities", synth.spec.num_communities);
  c_synth->add_option("--nodes-per-community", synth.spec.nodes_per_community);
  c_synth->add_option("--p-intra", synth.spec.p_intra);
  c_synth->add_option("--p-inter", synth.spec.p_inter);
  c_synth->add_option("--features", synth.spec.feature_dim);
  c_synth->add_option("--illicit-fraction", synth.spec.illicit_fraction);
  c_synth->add_option("--seed", synth.spec.seed);
  c_synth->add_option("--out", synth.out)->required();

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Convert Elliptic CSVs or a labelled table (k-NN) to a graph file");
  c_ingest->add_option("--elliptic", ingest.source.elliptic_dir, "Elliptic directory (default: $FGV_DATA_DIR)");
  c_ingest->add_option("--table", ingest.table, "Labelled CSV table; builds a k-NN graph");
  c_ingest->add_option("--label-column", ingest.label_column);
  c_ingest->add_option("--drop", ingest.drop, "Columns to ignore")->delimiter(',');
  c_ingest->add_option("--knn", ingest.knn);
  c_ingest->add_option("--out", ingest.out)->required();

  PartitionArgs part;
  auto* c_part = app.add_subcommand("partition", "Assign nodes to silos and print partition statistics");
  part.source.add_options(*c_part);
  c_part->add_option("--method", part.method, "louvain, edgecut or file");
  c_part->add_option("--k", part.k);
  c_part->add_option("--seed", part.seed);
  c_part->add_option("--resolution", part.resolution);
  c_part->add_option("--in", part.in, "Partition file to read with --method file");
  c_part->add_option("--out", part.out, "Write the partition file here");
  c_part->add_option("--stats-json", part.stats_json);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Run all seeds of an experiment");
  train.source.add_options(*c_train);
  train.flags.add_options(*c_train);
  c_train->add_option("--out-dir", train.out_dir);
  c_train->add_option("--partition-seed", train.partition_seed);

  AuditArgs audit;
  auto* c_audit = app.add_subcommand("audit", "Inversion and membership inference attacks on a checkpoint");
  audit.source.add_options(*c_audit);
  audit.flags.add_options(*c_audit);
  c_audit->add_option("--checkpoint", audit.checkpoint)->required();
  c_audit->add_option("--attack", audit.attack, "inversion, mia or all");
  c_audit->add_option("--attack-seed", audit.seed);
  c_audit->add_option("--attacker-epochs", audit.attacker_epochs);
  c_audit->add_option("--shadow-epochs", audit.shadow_epochs);
  c_audit->add_option("--shadows", audit.shadows);
  c_audit->add_option("--partition-seed", audit.partition_seed);
  c_audit->add_option("--out", audit.out, "Report path (default: stdout)");

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench-pqc", "Encryption latency and size overhead per batch size");
  c_bench->add_option("--sizes", bench.sizes)->delimiter(',');
  c_bench->add_option("--width", bench.options.width);
  c_bench->add_option("--repeats", bench.options.repeats);
  c_bench->add_option("--seed", bench.options.seed);
  c_bench->add_option("--out", bench.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*c_synth) return cmd_synth(synth);
    if (*c_ingest) return cmd_ingest(ingest);
    if (*c_part) return cmd_partition(part);
    if (*c_train) return cmd_train(train);
    if (*c_audit) return cmd_audit(audit);
    if (*c_bench) return cmd_bench_pqc(bench);
  } catch (const fgv::ConfigError& e) {
    return report_error("usage error", e, kUsage);
  } catch (const fgv::InvalidArgument& e) {
    return report_error("usage error", e, kUsage);
  } catch (const fgv::DataError& e) {
    return report_error("data error", e, kData);
  } catch (const fgv::CryptoError& e) {
    return report_error("crypto error", e, kRuntime);
  } catch (const std::system_error& e) {
    return report_error("data error", e, kData);
  } catch (const std::exception& e) {
    return report_error("error", e, kRuntime);
  }
  return kUsage;
}
