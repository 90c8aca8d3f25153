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

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include <fmt/format.h>

#include "../graph/csv.hpp"
#include "fgv/error.hpp"
#include "fgv/fed.hpp"

namespace fgv {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kLocal: return "local";
    case Mode::kFedAvg: return "fedavg";
    case Mode::kFedGraph: return "fedgraph";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "local") return Mode::kLocal;
  if (text == "fedavg") return Mode::kFedAvg;
  if (text == "fedgraph") return Mode::kFedGraph;
  throw ConfigError(fmt::format("unknown mode '{}' (expected local, fedavg or fedgraph)", text));
}

std::string to_string(PartitionMethod method) {
  switch (method) {
    case PartitionMethod::kLouvain: return "louvain";
    case PartitionMethod::kEdgeCut: return "edgecut";
    case PartitionMethod::kFile: return "file";
  }
  return "?";
}

PartitionMethod parse_partition_method(std::string_view text) {
  if (text == "louvain") return PartitionMethod::kLouvain;
  if (text == "edgecut") return PartitionMethod::kEdgeCut;
  if (text == "file") return PartitionMethod::kFile;
  throw ConfigError(fmt::format("unknown partition method '{}' (expected louvain, edgecut or file)", text));
}

AdamConfig ExperimentConfig::adam() const {
  AdamConfig a;
  a.learning_rate = learning_rate;
  a.weight_decay = weight_decay;
  return a;
}

SplitRule ExperimentConfig::split_rule() const {
  if (split == "temporal") return TemporalSplit{last_train_step};
  if (split == "random") return RandomSplit{train_fraction, split_seed};
  throw ConfigError(fmt::format("unknown split '{}' (expected temporal or random)", split));
}

void ExperimentConfig::validate() const {
  if (num_silos == 0) throw ConfigError("k must be at least 1");
  if (hidden == 0) throw ConfigError("hidden must be positive");
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a non-negative number");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be non-negative");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (partition == PartitionMethod::kFile && partition_file.empty()) {
    throw ConfigError("partition = file needs partition_file");
  }
  if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("train_fraction must lie in (0, 1)");
  split_rule();
}

namespace {

template <class T>
T number(std::string_view key, std::string_view value) {
  if (auto v = csv::parse_number<T>(value)) return *v;
  throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, value));
}

bool boolean(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, value));
}

std::vector<std::uint64_t> seed_list(std::string_view value) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto end = std::min(value.find(',', start), value.size());
    const auto item = csv::trim(value.substr(start, end - start));
    if (!item.empty()) seeds.push_back(number<std::uint64_t>("seeds", item));
    start = end + 1;
  }
  if (seeds.empty()) throw ConfigError("seeds: empty list");
  return seeds;
}

}  // namespace

void set_config_value(ExperimentConfig& c, std::string_view key, std::string_view value) {
  value = csv::trim(value);
  if (key == "rounds") c.rounds = number<std::size_t>(key, value);
  else if (key == "epochs") c.epochs = number<std::size_t>(key, value);
  else if (key == "lambda") c.lambda = number<double>(key, value);
  else if (key == "k") c.num_silos = number<std::size_t>(key, value);
  else if (key == "learning_rate") c.learning_rate = number<double>(key, value);
  else if (key == "weight_decay") c.weight_decay = number<double>(key, value);
  else if (key == "hidden") c.hidden = number<std::size_t>(key, value);
  else if (key == "seeds") c.seeds = seed_list(value);
  else if (key == "seed") c.seeds = {number<std::uint64_t>(key, value)};
  else if (key == "partition") c.partition = parse_partition_method(value);
  else if (key == "partition_file") c.partition_file = std::string(value);
  else if (key == "resolution") c.resolution = number<double>(key, value);
  else if (key == "mode") c.mode = parse_mode(value);
  else if (key == "split") c.split = std::string(value);
  else if (key == "last_train_step") c.last_train_step = number<std::int32_t>(key, value);
  else if (key == "train_fraction") c.train_fraction = number<double>(key, value);
  else if (key == "split_seed") c.split_seed = number<std::uint64_t>(key, value);
  else if (key == "exchange") c.exchange = boolean(key, value);
  else if (key == "exchange_last_round") c.exchange_last_round = number<std::size_t>(key, value);
  else if (key == "parallel_clients") c.parallel_clients = boolean(key, value);
  else throw ConfigError(fmt::format("unknown config key '{}'", key));
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = csv::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    try {
      set_config_value(base, csv::trim(view.substr(0, eq)), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_items(const ExperimentConfig& c) {
  std::string seeds;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) seeds += (i ? "," : "") + std::to_string(c.seeds[i]);
  return {
      {"rounds", std::to_string(c.rounds)},
      {"epochs", std::to_string(c.epochs)},
      {"lambda", fmt::format("{}", c.lambda)},
      {"k", std::to_string(c.num_silos)},
      {"learning_rate", fmt::format("{}", c.learning_rate)},
      {"weight_decay", fmt::format("{}", c.weight_decay)},
      {"hidden", std::to_string(c.hidden)},
      {"seeds", seeds},
      {"partition", to_string(c.partition)},
      {"partition_file", c.partition_file},
      {"resolution", fmt::format("{}", c.resolution)},
      {"mode", to_string(c.mode)},
      {"split", c.split},
      {"last_train_step", std::to_string(c.last_train_step)},
      {"train_fraction", fmt::format("{}", c.train_fraction)},
      {"split_seed", std::to_string(c.split_seed)},
      {"exchange", c.exchange ? "true" : "false"},
      {"exchange_last_round", std::to_string(c.exchange_last_round)},
      {"parallel_clients", c.parallel_clients ? "true" : "false"},
  };
}

}  // namespace fgv
