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

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "../common/bytes.hpp"
#include "fgv/error.hpp"
#include "fgv/gnn.hpp"

namespace fgv {

EmbeddingBatch gather_embeddings(const FeatureMatrix& embeddings, const Subgraph& subgraph,
                                 std::span<const NodeId> global_ids, std::uint32_t round,
                                 SiloId source_silo) {
  if (static_cast<std::size_t>(embeddings.rows()) != subgraph.global_ids.size()) {
    throw ShapeError("gather_embeddings: embedding rows do not match the subgraph");
  }
  EmbeddingBatch batch;
  batch.round = round;
  batch.source_silo = source_silo;
  batch.vectors.resize(static_cast<Eigen::Index>(global_ids.size()), embeddings.cols());
  batch.node_ids.reserve(global_ids.size());
  for (std::size_t i = 0; i < global_ids.size(); ++i) {
    const auto local = subgraph.local_of(global_ids[i]);
    if (local < 0) throw InvalidArgument(fmt::format("gather_embeddings: node {} is not in the subgraph", global_ids[i]));
    batch.node_ids.push_back(global_ids[i]);
    batch.vectors.row(static_cast<Eigen::Index>(i)) = embeddings.row(local);
  }
  return batch;
}

EmbeddingBatch extract_boundary_embeddings(const SageModel& model, const Subgraph& subgraph,
                                           const MeanAggregator& aggregator,
                                           std::span<const NodeId> global_ids, std::uint32_t round,
                                           SiloId source_silo) {
  const auto cache = forward(model, aggregator, subgraph.graph.features());
  return gather_embeddings(cache.embeddings, subgraph, global_ids, round, source_silo);
}

std::vector<std::uint8_t> serialize_batch(const EmbeddingBatch& batch) {
  if (batch.vectors.rows() != static_cast<Eigen::Index>(batch.size())) {
    throw ShapeError("serialize_batch: ids and vectors disagree");
  }
  if (batch.size() > UINT32_MAX) throw InvalidArgument("serialize_batch: too many rows");
  const auto width = static_cast<std::size_t>(batch.vectors.cols());
  std::vector<std::uint8_t> out;
  out.reserve(serialized_batch_size(batch.size(), width));
  bytes::put_le(out, static_cast<std::uint32_t>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    bytes::put_le(out, batch.node_ids[i]);
    for (std::size_t c = 0; c < width; ++c) {
      bytes::put_f32(out, batch.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    }
  }
  return out;
}

EmbeddingBatch deserialize_batch(std::span<const std::uint8_t> data, std::uint32_t round, SiloId source_silo) {
  bytes::Reader in(data);
  const auto count = in.le<std::uint32_t>();
  EmbeddingBatch batch;
  batch.round = round;
  batch.source_silo = source_silo;
  if (count == 0) {
    if (in.remaining() != 0) throw DataError("embedding batch: trailing bytes after an empty batch");
    return batch;
  }
  const std::size_t per_row = in.remaining() / count;
  if (per_row * count != in.remaining() || per_row < 8 || (per_row - 8) % 4 != 0) {
    throw DataError(fmt::format("embedding batch: {} payload bytes do not hold {} rows", data.size(), count));
  }
  const auto width = static_cast<Eigen::Index>((per_row - 8) / 4);
  batch.node_ids.resize(count);
  batch.vectors.resize(count, width);
  for (std::uint32_t i = 0; i < count; ++i) {
    batch.node_ids[i] = in.le<std::uint64_t>();
    for (Eigen::Index c = 0; c < width; ++c) batch.vectors(i, c) = in.f32();
  }
  return batch;
}

namespace {

constexpr const char* kCheckpointMagic = "FGVCKPT 1";

std::string expect_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("checkpoint: truncated header");
  return line;
}

}  // namespace

void save_checkpoint(std::ostream& out, const SageModel& model) {
  std::string header = fmt::format("{}\nin_dim {}\nhidden {}\n", kCheckpointMagic, model.in_dim(), model.hidden());
  const auto tensors = model.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    header += fmt::format("tensor {} {} {}\n", SageModel::kTensorNames[i], tensors[i]->rows(), tensors[i]->cols());
  }
  header += "end\n";
  std::vector<std::uint8_t> blob;
  const auto flat = model.flatten();
  blob.reserve(8 + 4 * flat.size());
  bytes::put_le(blob, static_cast<std::uint64_t>(flat.size()));
  for (float v : flat) bytes::put_f32(blob, v);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error("checkpoint: write failed");
}

SageModel load_checkpoint(std::istream& in) {
  if (expect_line(in) != kCheckpointMagic) throw DataError("checkpoint: bad magic");
  std::size_t in_dim = 0;
  std::size_t hidden = 0;
  {
    std::istringstream a(expect_line(in));
    std::istringstream b(expect_line(in));
    std::string ka, kb;
    if (!(a >> ka >> in_dim) || ka != "in_dim" || !(b >> kb >> hidden) || kb != "hidden" || in_dim == 0 ||
        hidden == 0) {
      throw DataError("checkpoint: bad dimension lines");
    }
  }
  auto model = SageModel::zeros(in_dim, hidden);
  const auto tensors = model.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    std::istringstream s(expect_line(in));
    std::string tag, name;
    Eigen::Index rows = -1, cols = -1;
    if (!(s >> tag >> name >> rows >> cols) || tag != "tensor" || name != SageModel::kTensorNames[i] ||
        rows != tensors[i]->rows() || cols != tensors[i]->cols()) {
      throw DataError(fmt::format("checkpoint: tensor line {} does not match {}", i, SageModel::kTensorNames[i]));
    }
  }
  if (expect_line(in) != "end") throw DataError("checkpoint: missing end marker");

  const std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  bytes::Reader r(blob);
  const auto count = r.le<std::uint64_t>();
  if (count != model.num_parameters()) {
    throw DataError(fmt::format("checkpoint: blob holds {} values, model needs {}", count, model.num_parameters()));
  }
  if (r.remaining() != 4 * count) throw DataError("checkpoint: blob length mismatch");
  std::vector<float> flat(count);
  for (auto& v : flat) v = r.f32();
  model.unflatten(flat);
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const SageModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save_checkpoint(out, model);
}

SageModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace fgv
