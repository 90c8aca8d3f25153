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

#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "fgv/fed.hpp"

namespace fgv {

std::vector<CommRow> comm_accounting(const RoundMetrics& round) {
  return {
      {"Model parameters", round.bytes_model},
      {"Boundary embeddings", round.bytes_embed},
      {"PQC ciphertext overhead", round.bytes_overhead},
      {"Total per round", round.bytes_model + round.bytes_embed + round.bytes_overhead},
  };
}

std::string format_comm_table(std::span<const CommRow> rows) {
  std::string out = fmt::format("{:<26}{:>14}{:>12}\n", "Component", "Bytes", "KB");
  for (const auto& r : rows) out += fmt::format("{:<26}{:>14}{:>12.1f}\n", r.label, r.bytes, r.bytes / 1024.0);
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const SeedRun> runs, Mode mode, bool header) {
  if (header) out << "round,seed,mode,f1,precision,recall,loss_cls,loss_bnd,bytes_model,bytes_embed,bytes_overhead\n";
  const auto name = to_string(mode);
  for (const auto& run : runs) {
    for (const auto& m : run.rounds) {
      out << fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{},{}\n", m.round, run.seed, name, m.f1,
                         m.precision, m.recall, m.loss_cls, m.loss_bnd, m.bytes_model, m.bytes_embed,
                         m.bytes_overhead);
    }
  }
}

std::string summary_json(const ExperimentResult& result) {
  using nlohmann::json;
  json config = json::object();
  for (const auto& [k, v] : config_items(result.config)) config[k] = v;
  json seeds = json::array();
  std::size_t total_model = 0, total_embed = 0, total_overhead = 0, rounds = 0;
  for (const auto& run : result.runs) {
    const auto& last = run.rounds.back();
    std::size_t dropped = 0;
    for (const auto& m : run.rounds) {
      dropped += m.dropped_envelopes;
      if (m.round == 0) continue;
      total_model += m.bytes_model;
      total_embed += m.bytes_embed;
      total_overhead += m.bytes_overhead;
      ++rounds;
    }
    seeds.push_back({{"seed", run.seed},
                     {"f1", last.f1},
                     {"precision", last.precision},
                     {"recall", last.recall},
                     {"dropped_envelopes", dropped}});
  }
  auto per_round = [&](std::size_t total) { return rounds ? static_cast<double>(total) / rounds : 0.0; };
  const std::size_t params = result.runs.empty() ? 0 : result.runs.front().final_model.num_parameters();
  json j = {
      {"mode", to_string(result.config.mode)},
      {"config", config},
      {"partition",
       {{"cross_edge_fraction", result.cross_edge_fraction},
        {"silo_sizes", result.silo_sizes},
        {"boundary_sizes", result.boundary_sizes}}},
      {"model", {{"parameters", params}, {"bytes", params * sizeof(float)}}},
      {"f1", {{"mean", result.f1.mean}, {"std", result.f1.std}}},
      {"precision", {{"mean", result.precision.mean}, {"std", result.precision.std}}},
      {"recall", {{"mean", result.recall.mean}, {"std", result.recall.std}}},
      {"communication_per_round",
       {{"model_parameters", per_round(total_model)},
        {"boundary_embeddings", per_round(total_embed)},
        {"pqc_overhead", per_round(total_overhead)},
        {"total", per_round(total_model + total_embed + total_overhead)}}},
      {"seeds", seeds},
  };
  return j.dump(2);
}

}  // namespace fgv
