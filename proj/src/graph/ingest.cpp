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
#include <fstream>
#include <string>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/os.h>

#include "csv.hpp"
#include "fgv/error.hpp"
#include "fgv/graph.hpp"

namespace fgv {
namespace {

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

bool looks_like_header(std::string_view first_field) {
  return !csv::parse_number<double>(first_field).has_value();
}

std::uint64_t parse_tx_id(std::string_view field, const std::string& src, std::size_t line) {
  auto id = csv::parse_number<std::uint64_t>(field);
  if (!id) throw ParseError(src, line, "expected an integer txId, got '" + std::string(field) + "'");
  return *id;
}

}  // namespace

EllipticPaths EllipticPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "elliptic_txs_features.csv", dir / "elliptic_txs_classes.csv",
          dir / "elliptic_txs_edgelist.csv"};
}

TransactionGraph load_elliptic(const EllipticPaths& paths) {
  std::vector<std::string_view> fields;
  std::vector<std::string> scratch;
  std::string line;

  // Features: txId, time step, then d feature columns.
  std::vector<std::uint64_t> tx_ids;
  std::vector<std::int32_t> steps;
  std::vector<float> values;
  std::size_t width = 0;
  {
    auto in = open_or_throw(paths.features);
    csv::LineReader reader(in);
    const std::string src = paths.features.filename().string();
    while (reader.next(line)) {
      if (csv::trim(line).empty()) continue;
      csv::split(line, ',', fields, scratch);
      if (tx_ids.empty() && width == 0 && looks_like_header(fields[0])) continue;
      if (fields.size() < 3) throw ParseError(src, reader.line_no(), "expected txId, time step and features");
      const std::size_t row_width = fields.size() - 2;
      if (width == 0) width = row_width;
      if (row_width != width) {
        throw ParseError(src, reader.line_no(),
                         fmt::format("row has {} feature columns, expected {}", row_width, width));
      }
      tx_ids.push_back(parse_tx_id(fields[0], src, reader.line_no()));
      auto step = csv::parse_number<std::int32_t>(fields[1]);
      if (!step) throw ParseError(src, reader.line_no(), "time step is not an integer");
      steps.push_back(*step);
      for (std::size_t c = 2; c < fields.size(); ++c) {
        auto v = csv::parse_number<float>(fields[c]);
        if (!v) {
          throw ParseError(src, reader.line_no(),
                           fmt::format("column {} is not numeric: '{}'", c + 1, fields[c]));
        }
        values.push_back(*v);
      }
    }
  }
  const std::size_t n = tx_ids.size();
  std::unordered_map<std::uint64_t, NodeId> index;
  index.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (!index.emplace(tx_ids[i], static_cast<NodeId>(i)).second) {
      throw DataError(fmt::format("duplicate txId {} in {}", tx_ids[i], paths.features.string()));
    }
  }
  FeatureMatrix features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  if (n > 0) std::copy(values.begin(), values.end(), features.data());
  values.clear();
  values.shrink_to_fit();

  std::vector<Label> labels(n, Label::kUnknown);
  {
    auto in = open_or_throw(paths.classes);
    csv::LineReader reader(in);
    const std::string src = paths.classes.filename().string();
    bool first = true;
    while (reader.next(line)) {
      if (csv::trim(line).empty()) continue;
      csv::split(line, ',', fields, scratch);
      if (first && looks_like_header(fields[0])) {
        first = false;
        continue;
      }
      first = false;
      if (fields.size() != 2) throw ParseError(src, reader.line_no(), "expected txId,class");
      const auto id = parse_tx_id(fields[0], src, reader.line_no());
      auto it = index.find(id);
      if (it == index.end()) {
        throw DataError(fmt::format("{}:{}: txId {} is not in the features file", src,
                                    reader.line_no(), id));
      }
      const std::string_view cls = fields[1];
      if (cls == "1") {
        labels[it->second] = Label::kIllicit;
      } else if (cls == "2") {
        labels[it->second] = Label::kLicit;
      } else if (cls == "unknown") {
        labels[it->second] = Label::kUnknown;
      } else {
        throw ParseError(src, reader.line_no(), "class must be 1, 2 or unknown");
      }
    }
  }

  std::vector<Edge> edges;
  {
    auto in = open_or_throw(paths.edgelist);
    csv::LineReader reader(in);
    const std::string src = paths.edgelist.filename().string();
    bool first = true;
    while (reader.next(line)) {
      if (csv::trim(line).empty()) continue;
      csv::split(line, ',', fields, scratch);
      if (first && looks_like_header(fields[0])) {
        first = false;
        continue;
      }
      first = false;
      if (fields.size() != 2) throw ParseError(src, reader.line_no(), "expected txId1,txId2");
      const auto a = parse_tx_id(fields[0], src, reader.line_no());
      const auto b = parse_tx_id(fields[1], src, reader.line_no());
      auto ia = index.find(a);
      auto ib = index.find(b);
      if (ia == index.end() || ib == index.end()) {
        throw DataError(fmt::format("{}:{}: txId {} is not in the features file", src,
                                    reader.line_no(), ia == index.end() ? a : b));
      }
      edges.push_back({ia->second, ib->second});
    }
  }
  return TransactionGraph(n, edges, std::move(features), std::move(labels), std::move(steps),
                          std::move(tx_ids));
}

LabeledTable load_labeled_table(const std::filesystem::path& path, const std::string& label_column,
                                std::span<const std::string> drop_columns) {
  auto in = open_or_throw(path);
  csv::LineReader reader(in);
  const std::string src = path.filename().string();
  std::vector<std::string_view> fields;
  std::vector<std::string> scratch;
  std::string line;

  if (!reader.next(line)) throw DataError(path.string() + " is empty");
  csv::split(line, ',', fields, scratch);
  std::vector<std::string> header(fields.begin(), fields.end());
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) throw DataError("column '" + label_column + "' not found in " + src);
  const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());

  std::vector<std::vector<std::string>> rows;
  while (reader.next(line)) {
    if (csv::trim(line).empty()) continue;
    csv::split(line, ',', fields, scratch);
    if (fields.size() != header.size()) {
      throw ParseError(src, reader.line_no(),
                       fmt::format("row has {} fields, header has {}", fields.size(), header.size()));
    }
    rows.emplace_back(fields.begin(), fields.end());
  }

  // A column is a feature when it is not dropped and every non-empty cell is numeric.
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    if (std::find(drop_columns.begin(), drop_columns.end(), header[c]) != drop_columns.end()) continue;
    bool numeric = true;
    for (const auto& r : rows) {
      if (!csv::trim(r[c]).empty() && !csv::parse_number<double>(r[c])) {
        numeric = false;
        break;
      }
    }
    if (numeric) keep.push_back(c);
  }

  LabeledTable table;
  table.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep.size()));
  table.labels.resize(rows.size());
  for (std::size_t c : keep) table.feature_names.push_back(header[c]);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) {
      auto v = csv::parse_number<double>(rows[i][keep[j]]);
      table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          v ? static_cast<float>(*v) : 0.0f;
    }
    auto flag = csv::parse_number<int>(rows[i][label_col]);
    if (!flag || (*flag != 0 && *flag != 1)) {
      // Header is line 1, so data row i sits on line i + 2 ignoring blank lines.
      throw ParseError(src, i + 2, "label column must be 0 or 1");
    }
    table.labels[i] = *flag == 1 ? Label::kIllicit : Label::kLicit;
  }
  return table;
}

void write_graph_text(const std::filesystem::path& path, const TransactionGraph& graph) {
  auto out = fmt::output_file(path.string());
  const bool steps = graph.has_time_steps();
  out.print("fgv-graph 1\n");
  out.print("nodes {} features {} time_steps {}\n", graph.num_nodes(), graph.feature_dim(),
            steps ? 1 : 0);
  const auto& f = graph.features();
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    out.print("{}", static_cast<int>(graph.label(v)));
    if (steps) out.print("\t{}", graph.time_steps()[v]);
    for (Eigen::Index c = 0; c < f.cols(); ++c) out.print("\t{}", f(v, c));
    out.print("\n");
  }
  out.print("edges {}\n", graph.num_edges());
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    for (NodeId w : graph.out_neighbors(v)) out.print("{}\t{}\n", v, w);
  }
}

TransactionGraph read_graph_text(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  csv::LineReader reader(in);
  const std::string src = path.filename().string();
  std::vector<std::string_view> fields;
  std::vector<std::string> scratch;
  std::string line;

  auto expect_line = [&](const char* what) {
    if (!reader.next(line)) throw ParseError(src, reader.line_no() + 1, std::string("missing ") + what);
    csv::split(line, ' ', fields, scratch);
  };
  expect_line("format line");
  if (fields.size() != 2 || fields[0] != "fgv-graph" || fields[1] != "1") {
    throw ParseError(src, reader.line_no(), "not an fgv-graph v1 file");
  }
  expect_line("size line");
  if (fields.size() != 6 || fields[0] != "nodes" || fields[2] != "features" || fields[4] != "time_steps") {
    throw ParseError(src, reader.line_no(), "expected 'nodes N features D time_steps 0|1'");
  }
  const auto n = csv::parse_number<std::size_t>(fields[1]);
  const auto d = csv::parse_number<std::size_t>(fields[3]);
  const auto has_steps = csv::parse_number<int>(fields[5]);
  if (!n || !d || !has_steps) throw ParseError(src, reader.line_no(), "bad size line");

  FeatureMatrix features(static_cast<Eigen::Index>(*n), static_cast<Eigen::Index>(*d));
  std::vector<Label> labels(*n);
  std::vector<std::int32_t> steps(*has_steps ? *n : 0);
  const std::size_t lead = *has_steps ? 2 : 1;
  for (std::size_t v = 0; v < *n; ++v) {
    if (!reader.next(line)) throw ParseError(src, reader.line_no() + 1, "missing node row");
    csv::split(line, '\t', fields, scratch);
    if (fields.size() != lead + *d) throw ParseError(src, reader.line_no(), "node row has wrong width");
    auto label = csv::parse_number<int>(fields[0]);
    if (!label || *label < -1 || *label > 1) throw ParseError(src, reader.line_no(), "label must be -1, 0 or 1");
    labels[v] = static_cast<Label>(*label);
    if (*has_steps) {
      auto s = csv::parse_number<std::int32_t>(fields[1]);
      if (!s) throw ParseError(src, reader.line_no(), "bad time step");
      steps[v] = *s;
    }
    for (std::size_t c = 0; c < *d; ++c) {
      auto x = csv::parse_number<float>(fields[lead + c]);
      if (!x) throw ParseError(src, reader.line_no(), "bad feature value");
      features(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(c)) = *x;
    }
  }
  expect_line("edge count line");
  if (fields.size() != 2 || fields[0] != "edges") throw ParseError(src, reader.line_no(), "expected 'edges M'");
  const auto m = csv::parse_number<std::size_t>(fields[1]);
  if (!m) throw ParseError(src, reader.line_no(), "bad edge count");
  std::vector<Edge> edges(*m);
  for (std::size_t i = 0; i < *m; ++i) {
    if (!reader.next(line)) throw ParseError(src, reader.line_no() + 1, "missing edge row");
    csv::split(line, '\t', fields, scratch);
    auto a = fields.size() == 2 ? csv::parse_number<NodeId>(fields[0]) : std::nullopt;
    auto b = fields.size() == 2 ? csv::parse_number<NodeId>(fields[1]) : std::nullopt;
    if (!a || !b) throw ParseError(src, reader.line_no(), "expected 'src<TAB>dst'");
    if (*a >= *n || *b >= *n) throw DataError(fmt::format("{}:{}: edge endpoint out of range", src, reader.line_no()));
    edges[i] = {*a, *b};
  }
  return TransactionGraph(*n, edges, std::move(features), std::move(labels), std::move(steps));
}

}  // namespace fgv
