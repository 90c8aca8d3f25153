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
#include <map>
#include <numeric>
#include <set>

#include <doctest.h>

#include "fgv/error.hpp"
#include "fgv/partition.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fgv;
using fgv::testing::TempDir;

namespace {

TransactionGraph from_edges(std::size_t n, std::vector<Edge> edges) {
  return TransactionGraph(n, edges, FeatureMatrix::Zero(static_cast<Eigen::Index>(n), 1),
                          std::vector<Label>(n, Label::kLicit));
}

}  // namespace

TEST_CASE("louvain separates disjoint triangles") {
  const auto g = from_edges(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}});
  const auto c = louvain(g, 42);
  CHECK(c.num_communities == 2);
  CHECK(c.community[0] == c.community[1]);
  CHECK(c.community[1] == c.community[2]);
  CHECK(c.community[3] == c.community[4]);
  CHECK(c.community[0] != c.community[3]);
  CHECK(c.modularity == doctest::Approx(0.5));
}

TEST_CASE("louvain degenerate inputs") {
  const auto single = from_edges(1, {});
  const auto c = louvain(single, 1);
  CHECK(c.num_communities == 1);
  CHECK(c.modularity == 0.0);
  CHECK_THROWS_AS(louvain(TransactionGraph{}, 1), InvalidArgument);
}

TEST_CASE("louvain recovers a planted 3-block SBM") {
  SyntheticSpec spec;
  spec.p_intra = 0.3;
  spec.p_inter = 0.005;
  for (std::uint64_t seed : {42u, 7u, 2024u}) {
    spec.seed = seed;
    const auto s = generate_synthetic(spec);
    const auto c = louvain(s.graph, seed);
    CHECK(fgv::testing::adjusted_rand_index(c.community, s.community) >= 0.9);
  }
}

TEST_CASE("louvain modularity agrees with a dense oracle and never decreases") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto g = fgv::testing::random_graph(40, 80, 1, seed, true);
    const auto c = louvain(g, seed);
    CHECK(c.modularity >= 0.0);
    CHECK(c.modularity == doctest::Approx(fgv::testing::dense_modularity(g, c.community)).epsilon(1e-9));
    CHECK(modularity(g, c.community) == doctest::Approx(c.modularity).epsilon(1e-12));
    for (std::size_t i = 1; i < c.level_modularity.size(); ++i) {
      CHECK(c.level_modularity[i] >= c.level_modularity[i - 1] - 1e-12);
    }
    const auto again = louvain(g, seed);
    CHECK(again.community == c.community);
  }
}

TEST_CASE("communities_to_silos greedy packing") {
  SUBCASE("sizes 50,30,20,10 into two silos") {
    const std::size_t sizes[] = {50, 30, 20, 10};
    CommunityLabeling lab;
    lab.num_communities = 4;
    for (std::uint32_t c = 0; c < 4; ++c) lab.community.insert(lab.community.end(), sizes[c], c);
    const auto g = from_edges(110, {});
    const auto p = communities_to_silos(g, lab, 2);
    CHECK(p.silo_sizes() == std::vector<std::size_t>{60, 50});
    CHECK(p.silo_of(0) == p.silo_of(109));    // 50 with 10
    CHECK(p.silo_of(50) == p.silo_of(80));    // 30 with 20
    CHECK(p.silo_of(0) != p.silo_of(50));
  }
  SUBCASE("equal communities, one per silo; K=1 has no boundary") {
    SyntheticSpec spec;
    spec.nodes_per_community = 30;
    spec.p_intra = 0.4;
    const auto s = generate_synthetic(spec);
    CommunityLabeling planted{s.community, 3, 0.0, {}};
    const auto p3 = communities_to_silos(s.graph, planted, 3);
    CHECK(p3.silo_sizes() == std::vector<std::size_t>{30, 30, 30});
    const auto p1 = communities_to_silos(s.graph, planted, 1);
    CHECK(p1.boundary(0).empty());
    CHECK(p1.cross_edges().empty());
    CHECK(cross_edge_fraction(p1, s.graph) == 0.0);
  }
  SUBCASE("atomicity on a louvain labeling") {
    SyntheticSpec spec;
    const auto s = generate_synthetic(spec);
    const auto lab = louvain(s.graph, 42);
    const auto p = communities_to_silos(s.graph, lab, 3);
    std::map<std::uint32_t, std::set<SiloId>> silos_of_comm;
    for (NodeId v = 0; v < s.graph.num_nodes(); ++v) silos_of_comm[lab.community[v]].insert(p.silo_of(v));
    for (const auto& [c, silos] : silos_of_comm) CHECK(silos.size() == 1);
  }
  SUBCASE("too few communities") {
    const auto g = from_edges(3, {{0, 1}, {1, 2}});
    CommunityLabeling lab{{0, 0, 0}, 1, 0.0, {}};
    CHECK_THROWS_AS(communities_to_silos(g, lab, 2), InvalidArgument);
  }
}

TEST_CASE("boundary sets and cross edges match a brute-force scan") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + trial * 3;
    const std::size_t k = 1 + trial % 4;
    const auto g = fgv::testing::random_graph(n, 2 * n, 1, 1000 + trial, true);
    std::vector<SiloId> assign(n);
    std::uniform_int_distribution<int> silo(0, static_cast<int>(k) - 1);
    for (auto& a : assign) a = static_cast<SiloId>(silo(rng));
    const SiloPartition p(g, assign, k);
    const auto oracle = fgv::testing::brute_force_boundaries(g, assign, k);
    for (SiloId s = 0; s < k; ++s) {
      CHECK(std::vector<NodeId>(p.boundary(s).begin(), p.boundary(s).end()) == oracle.boundary[s]);
    }
    CHECK(p.cross_edges().size() == oracle.cross);
    CHECK(cross_edge_fraction(p, g) == doctest::Approx(double(oracle.cross) / double(g.num_edges())));
    CHECK(edge_cut(g, assign) == oracle.cross);
  }
}

TEST_CASE("cross_edge_fraction of a side-split bipartite graph is 1") {
  const auto g = from_edges(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}});
  const SiloPartition p(g, {0, 0, 1, 1}, 2);
  CHECK(cross_edge_fraction(p, g) == 1.0);
  CHECK(p.boundary(0).size() == 2);
}

TEST_CASE("balanced_edgecut") {
  SUBCASE("path of four nodes cuts one edge") {
    const auto g = from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
    const auto p = balanced_edgecut(g, 2, 42);
    CHECK(p.cross_edges().size() == 1);
    CHECK(p.silo_sizes() == std::vector<std::size_t>{2, 2});
  }
  SUBCASE("beats random balanced assignments and respects balance") {
    const std::size_t n = 200;
    const auto g = fgv::testing::random_graph(n, 400, 1, 17);
    const auto p = balanced_edgecut(g, 2, 42);
    for (auto s : p.silo_sizes()) {
      CHECK(s >= 90);
      CHECK(s <= 110);
    }
    std::mt19937_64 rng(5);
    std::vector<SiloId> random_assign(n);
    for (std::size_t i = 0; i < n; ++i) random_assign[i] = i < n / 2 ? 0 : 1;
    std::size_t best_random = SIZE_MAX;
    for (int t = 0; t < 100; ++t) {
      std::shuffle(random_assign.begin(), random_assign.end(), rng);
      best_random = std::min(best_random, edge_cut(g, random_assign));
    }
    CHECK(p.cross_edges().size() <= best_random);
  }
  SUBCASE("three silos on an SBM") {
    const auto s = generate_synthetic(SyntheticSpec{});
    const auto p = balanced_edgecut(s.graph, 3, 1);
    for (auto size : p.silo_sizes()) {
      CHECK(size >= 90);
      CHECK(size <= 110);
    }
  }
  SUBCASE("errors") {
    const auto g = from_edges(3, {{0, 1}});
    CHECK_THROWS_AS(balanced_edgecut(g, 4, 1), InvalidArgument);
    CHECK_THROWS_AS(balanced_edgecut(g, 1, 1), InvalidArgument);
  }
}

TEST_CASE("partition files round-trip and reject bad input") {
  TempDir dir;
  const auto g = fgv::testing::random_graph(30, 60, 1, 3);
  const auto p = balanced_edgecut(g, 3, 7);
  const auto path = dir.path() / "p.tsv";
  write_partition_file(path, p);
  const auto q = read_partition_file(path, g);
  CHECK(q.num_silos() == 3);
  CHECK(std::equal(q.assignment().begin(), q.assignment().end(), p.assignment().begin()));

  const auto small = from_edges(3, {{0, 1}});
  CHECK_THROWS_AS(read_partition_file(dir.write("a", "0\t0\n1\t1\n"), small), DataError);
  CHECK_THROWS_AS(read_partition_file(dir.write("b", "0\t0\n1\t1\n2\tx\n"), small), ParseError);
  CHECK_THROWS_AS(read_partition_file(dir.write("c", "0\t0\n0\t1\n2\t0\n"), small), ParseError);
  CHECK_THROWS_AS(read_partition_file(dir.write("d", "0\t0\n1\t1\n5\t0\n"), small), ParseError);
  CHECK_THROWS_AS(read_partition_file(dir.write("e", "0\t0\n1\t1\n2\t2\n"), small, 2), InvalidArgument);
}
