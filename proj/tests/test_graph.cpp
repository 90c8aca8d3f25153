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
#include <map>
#include <set>
#include <sstream>

#include <doctest.h>

#include "fgv/error.hpp"
#include "fgv/graph.hpp"
#include "support.hpp"

using namespace fgv;
using fgv::testing::TempDir;

namespace {

// 5 transactions, header rows as in the public distribution.
constexpr const char* kFeatures =
    "txId,time_step,f1,f2\n"
    "101,1,0.5,1.0\n"
    "102,1,-1.0,2.0\n"
    "103,2,3.0,0.0\n"
    "104,35,1.5,1.5\n"
    "105,40,0.0,-2.0\n";
constexpr const char* kClasses =
    "txId,class\n"
    "101,1\n"
    "102,2\n"
    "103,unknown\n"
    "104,2\n"
    "105,1\n";
constexpr const char* kEdges =
    "txId1,txId2\n"
    "101,102\n"
    "102,103\n"
    "104,105\n"
    "101,105\n";

struct ManifestCounts {
  std::size_t nodes = 0, edges = 0, illicit = 0, licit = 0, unknown = 0;
};

// Counts straight from the text, independent of the loader.
ManifestCounts count_lines(const std::string& features, const std::string& classes, const std::string& edges) {
  auto data_lines = [](const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (first) { first = false; continue; }
      if (!line.empty()) out.push_back(line);
    }
    return out;
  };
  ManifestCounts c;
  c.nodes = data_lines(features).size();
  c.edges = data_lines(edges).size();
  for (const auto& l : data_lines(classes)) {
    const auto cls = l.substr(l.find(',') + 1);
    if (cls == "1") ++c.illicit;
    else if (cls == "2") ++c.licit;
    else ++c.unknown;
  }
  return c;
}

EllipticPaths write_fixture(const TempDir& dir, const std::string& f, const std::string& c, const std::string& e) {
  return {dir.write("f.csv", f), dir.write("c.csv", c), dir.write("e.csv", e)};
}

std::multiset<std::pair<NodeId, NodeId>> as_multiset(std::span<const Edge> edges) {
  std::multiset<std::pair<NodeId, NodeId>> s;
  for (auto e : edges) s.insert({e.src, e.dst});
  return s;
}

}  // namespace

TEST_CASE("load_elliptic matches independently counted fixture") {
  TempDir dir;
  const auto g = load_elliptic(write_fixture(dir, kFeatures, kClasses, kEdges));
  const auto expected = count_lines(kFeatures, kClasses, kEdges);
  const auto counts = g.label_counts();
  CHECK(g.num_nodes() == expected.nodes);
  CHECK(g.num_edges() == expected.edges);
  CHECK(counts.illicit == expected.illicit);
  CHECK(counts.licit == expected.licit);
  CHECK(counts.unknown == expected.unknown);
  CHECK(g.feature_dim() == 2);
  CHECK(g.time_steps()[3] == 35);
  CHECK(g.external_ids()[4] == 105);
  CHECK(g.features()(1, 0) == doctest::Approx(-1.0));
  CHECK(g.label(0) == Label::kIllicit);
  CHECK(g.out_neighbors(0).size() == 2);
}

TEST_CASE("load_elliptic accepts headerless files and a single node") {
  TempDir dir;
  const auto g = load_elliptic(write_fixture(dir, "7,1,0.25,0.5,0.75\n", "7,2\n", ""));
  CHECK(g.num_nodes() == 1);
  CHECK(g.num_edges() == 0);
  CHECK(g.feature_dim() == 3);
  CHECK(g.label(0) == Label::kLicit);
}

TEST_CASE("load_elliptic reports line numbers and dangling ids") {
  TempDir dir;
  SUBCASE("malformed feature row") {
    const auto paths = write_fixture(dir, "txId,time_step,f1\n1,1,0.5\n2,1,abc\n", "1,1\n2,2\n", "");
    try {
      load_elliptic(paths);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("ragged width") {
    const auto paths = write_fixture(dir, "1,1,0.5,1\n2,1,0.5\n", "", "");
    CHECK_THROWS_AS(load_elliptic(paths), ParseError);
  }
  SUBCASE("edge to unknown txId") {
    const auto paths = write_fixture(dir, kFeatures, kClasses, "txId1,txId2\n101,999\n");
    CHECK_THROWS_AS(load_elliptic(paths), DataError);
  }
  SUBCASE("class for unknown txId") {
    const auto paths = write_fixture(dir, kFeatures, "555,1\n", kEdges);
    CHECK_THROWS_AS(load_elliptic(paths), DataError);
  }
  SUBCASE("bad class value") {
    const auto paths = write_fixture(dir, kFeatures, "101,3\n", kEdges);
    CHECK_THROWS_AS(load_elliptic(paths), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_elliptic({dir.path() / "nope.csv", dir.path() / "c", dir.path() / "e"}), DataError);
  }
}

TEST_CASE("load_labeled_table keeps numeric columns") {
  TempDir dir;
  const auto p = dir.write("eth.csv",
                           "Index,Address,FLAG,a,b\n"
                           "1,0xabc,0,1.5,\n"
                           "2,0xdef,1,2.5,3\n");
  const std::vector<std::string> drop{"Index"};
  const auto t = load_labeled_table(p, "FLAG", drop);
  REQUIRE(t.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(t.labels == std::vector<Label>{Label::kLicit, Label::kIllicit});
  CHECK(t.features(0, 1) == 0.0f);
  CHECK(t.features(1, 1) == 3.0f);
}

TEST_CASE("CSR round-trips the edge list and in-lists transpose out-lists") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t n = 5 + seed;
    const auto g = fgv::testing::random_graph(n, 4 * n, 2, seed, true);
    std::vector<Edge> original;
    // Rebuild the input edge list the same way random_graph drew it.
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(n - 1));
    while (original.size() < 4 * n) original.push_back({node(rng), node(rng)});
    CHECK(as_multiset(g.edge_list()) == as_multiset(original));

    std::vector<std::vector<int>> adj(n, std::vector<int>(n, 0));
    for (auto e : original) ++adj[e.src][e.dst];
    for (NodeId v = 0; v < n; ++v) {
      std::vector<int> in_count(n, 0), out_count(n, 0);
      for (NodeId u : g.in_neighbors(v)) ++in_count[u];
      for (NodeId u : g.out_neighbors(v)) ++out_count[u];
      for (NodeId u = 0; u < n; ++u) {
        CHECK(in_count[u] == adj[u][v]);
        CHECK(out_count[u] == adj[v][u]);
      }
    }
  }
}

TEST_CASE("TransactionGraph rejects inconsistent inputs") {
  const std::vector<Edge> bad{{0, 3}};
  CHECK_THROWS_AS(TransactionGraph(3, bad, FeatureMatrix::Zero(3, 1), std::vector<Label>(3, Label::kLicit)),
                  InvalidArgument);
  CHECK_THROWS_AS(TransactionGraph(3, {}, FeatureMatrix::Zero(2, 1), std::vector<Label>(3, Label::kLicit)),
                  InvalidArgument);
  CHECK_THROWS_AS(TransactionGraph(3, {}, FeatureMatrix::Zero(3, 1), std::vector<Label>(2, Label::kLicit)),
                  InvalidArgument);
}

TEST_CASE("induced_subgraph keeps internal edges with local numbering") {
  const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {1, 3}};
  FeatureMatrix x(4, 1);
  x << 10, 11, 12, 13;
  const TransactionGraph g(4, edges, x, std::vector<Label>(4, Label::kLicit));
  const std::vector<NodeId> keep{1, 3};
  const auto sub = induced_subgraph(g, keep);
  CHECK(sub.graph.num_nodes() == 2);
  CHECK(sub.graph.num_edges() == 1);
  CHECK(sub.graph.out_neighbors(0).size() == 1);
  CHECK(sub.graph.out_neighbors(0)[0] == 1);
  CHECK(sub.graph.features()(1, 0) == 13);
  CHECK(sub.local_of(3) == 1);
  CHECK(sub.local_of(2) == -1);
}

TEST_CASE("build_knn_graph") {
  SUBCASE("collinear points") {
    FeatureMatrix x(3, 1);
    x << 0.0f, 1.0f, 3.0f;
    const auto g = build_knn_graph(x, 1);
    REQUIRE(g.out_neighbors(1).size() == 1);
    CHECK(g.out_neighbors(1)[0] == 0);
    CHECK(g.out_neighbors(0)[0] == 1);
    CHECK(g.out_neighbors(2)[0] == 1);
  }
  SUBCASE("matches exhaustive distance sort") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(-1, 1);
    FeatureMatrix x(50, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    const std::size_t k = 5;
    const auto g = build_knn_graph(x, k);
    CHECK(g.num_edges() == 50 * k);
    for (NodeId v = 0; v < 50; ++v) {
      std::vector<std::pair<double, NodeId>> all;
      for (NodeId w = 0; w < 50; ++w) {
        if (w == v) continue;
        double d = 0;
        for (Eigen::Index c = 0; c < 4; ++c) d += std::pow(double(x(v, c)) - double(x(w, c)), 2);
        all.push_back({d, w});
      }
      std::sort(all.begin(), all.end());
      auto got = g.out_neighbors(v);
      REQUIRE(got.size() == k);
      std::vector<NodeId> expected, actual(got.begin(), got.end());
      for (std::size_t i = 0; i < k; ++i) expected.push_back(all[i].second);
      std::sort(expected.begin(), expected.end());
      std::sort(actual.begin(), actual.end());
      CHECK(actual == expected);
    }
  }
  SUBCASE("ties go to the smaller id") {
    FeatureMatrix x = FeatureMatrix::Zero(4, 2);
    const auto g = build_knn_graph(x, 2);
    CHECK(std::vector<NodeId>(g.out_neighbors(3).begin(), g.out_neighbors(3).end()) == std::vector<NodeId>{0, 1});
    CHECK(std::vector<NodeId>(g.out_neighbors(0).begin(), g.out_neighbors(0).end()) == std::vector<NodeId>{1, 2});
  }
  SUBCASE("k out of range") {
    FeatureMatrix x = FeatureMatrix::Zero(3, 1);
    CHECK_THROWS_AS(build_knn_graph(x, 3), InvalidArgument);
    CHECK_THROWS_AS(build_knn_graph(x, 0), InvalidArgument);
  }
}

TEST_CASE("generate_synthetic") {
  SyntheticSpec spec;
  SUBCASE("p_inter = 0 gives no cross-community edges") {
    spec.p_inter = 0.0;
    const auto s = generate_synthetic(spec);
    for (auto e : s.graph.edge_list()) CHECK(s.community[e.src] == s.community[e.dst]);
  }
  SUBCASE("deterministic per seed") {
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(a.graph.edge_list() == b.graph.edge_list());
    CHECK(a.graph.features() == b.graph.features());
    spec.seed = 43;
    CHECK(generate_synthetic(spec).graph.edge_list() != a.graph.edge_list());
  }
  SUBCASE("cross-community edge count within 3 sigma of the binomial mean") {
    const auto s = generate_synthetic(spec);
    std::size_t cross = 0;
    for (auto e : s.graph.edge_list()) cross += s.community[e.src] != s.community[e.dst];
    const double pairs = 3.0 * 100 * 100;  // unordered inter-community pairs for 3 x 100
    const double mean = pairs * spec.p_inter;
    const double sigma = std::sqrt(pairs * spec.p_inter * (1 - spec.p_inter));
    CHECK(std::abs(double(cross) - mean) <= 3 * sigma);
  }
  SUBCASE("illicit labels only in even communities") {
    const auto s = generate_synthetic(spec);
    std::size_t illicit = 0;
    for (NodeId v = 0; v < s.graph.num_nodes(); ++v) {
      if (s.graph.label(v) == Label::kIllicit) {
        ++illicit;
        CHECK(s.community[v] % 2 == 0);
      }
    }
    CHECK(illicit > 0);
  }
  SUBCASE("invalid probabilities") {
    spec.p_inter = 0.2;
    spec.p_intra = 0.1;
    CHECK_THROWS_AS(generate_synthetic(spec), InvalidArgument);
  }
}

TEST_CASE("graph text format round-trips") {
  TempDir dir;
  SyntheticSpec spec;
  spec.nodes_per_community = 20;
  const auto g = generate_synthetic(spec).graph;
  const auto p = dir.path() / "g.txt";
  write_graph_text(p, g);
  const auto h = read_graph_text(p);
  CHECK(h.num_nodes() == g.num_nodes());
  CHECK(h.edge_list() == g.edge_list());
  CHECK(h.features() == g.features());
  CHECK(std::equal(h.labels().begin(), h.labels().end(), g.labels().begin()));
  CHECK_THROWS_AS(read_graph_text(dir.write("bad.txt", "not a graph\n")), ParseError);
}

TEST_CASE("make_split") {
  SUBCASE("temporal split puts late steps in test") {
    TempDir dir;
    const auto g = load_elliptic(write_fixture(dir, kFeatures, kClasses, kEdges));
    const auto mask = make_split(g, TemporalSplit{34});
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      if (g.label(v) == Label::kUnknown) CHECK(mask.roles[v] == NodeRole::kExcluded);
      else if (mask.roles[v] == NodeRole::kTest) CHECK(g.time_steps()[v] >= 35);
      else CHECK(g.time_steps()[v] <= 34);
    }
    CHECK(mask.count(NodeRole::kTest) == 2);
    CHECK(mask.derivation.find("34") != std::string::npos);
  }
  SUBCASE("random split deterministic and disjoint") {
    const auto g = fgv::testing::random_graph(100, 200, 3, 5);
    const auto a = make_split(g, RandomSplit{0.7, 9});
    const auto b = make_split(g, RandomSplit{0.7, 9});
    CHECK(a.roles == b.roles);
    CHECK(a.count(NodeRole::kTrain) == 70);
    CHECK(a.count(NodeRole::kTest) == 30);
  }
  SUBCASE("errors") {
    const auto g = fgv::testing::random_graph(10, 10, 2, 1);
    CHECK_THROWS_AS(make_split(g, TemporalSplit{}), DataError);
    const auto unl = g.with_labels(std::vector<Label>(10, Label::kUnknown));
    CHECK_THROWS_AS(make_split(unl, RandomSplit{}), DataError);
  }
}

TEST_CASE("zscore_normalize uses training statistics") {
  FeatureMatrix x(4, 2);
  x << 1, 5, 3, 5, 100, 5, -7, 5;
  NodeMask mask;
  mask.roles = {NodeRole::kTrain, NodeRole::kTrain, NodeRole::kTest, NodeRole::kExcluded};
  const auto z = zscore_normalize(x, mask);
  CHECK(z(0, 0) == doctest::Approx(-1.0));
  CHECK(z(1, 0) == doctest::Approx(1.0));
  CHECK(z(2, 0) == doctest::Approx(98.0));
  CHECK(z(0, 1) == 0.0f);
}
