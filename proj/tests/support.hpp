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

// Shared fixtures for the unit and acceptance tests.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fgv/graph.hpp"

namespace fgv::testing {

/// Directory under the system temp root, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("fgv-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& contents) const {
    auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << contents;
    return p;
  }

 private:
  std::filesystem::path path_;
};

/// Erdos-Renyi style directed graph with Gaussian features and random labels.
inline TransactionGraph random_graph(std::size_t n, std::size_t m, std::size_t d, std::uint64_t seed,
                                     bool allow_self_loops = false) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(n - 1));
  std::vector<Edge> edges;
  while (edges.size() < m) {
    Edge e{node(rng), node(rng)};
    if (!allow_self_loops && e.src == e.dst && n > 1) continue;
    edges.push_back(e);
  }
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  FeatureMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
  std::vector<Label> labels(n);
  std::bernoulli_distribution coin(0.3);
  for (auto& l : labels) l = coin(rng) ? Label::kIllicit : Label::kLicit;
  return TransactionGraph(n, edges, std::move(x), std::move(labels));
}

}  // namespace fgv::testing
