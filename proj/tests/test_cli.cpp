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

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "fgv/crypto.hpp"
#include "fgv/gnn.hpp"
#include "support.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run fgv_cli(const std::string& args) {
  const std::string cmd = std::string(FGV_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p) != nullptr) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

/// Cross-edge count by scanning the graph and partition text files directly.
std::pair<std::size_t, std::size_t> scan_cross_edges(const std::string& graph_file, const std::string& part_file) {
  std::map<std::string, std::string> silo;
  for (const auto& line : lines_of(slurp(part_file))) {
    std::istringstream f(line);
    std::string node, s;
    f >> node >> s;
    silo[node] = s;
  }
  const auto lines = lines_of(slurp(graph_file));
  std::size_t i = 0;
  while (lines[i].rfind("edges ", 0) != 0) ++i;
  std::size_t cross = 0, total = 0;
  for (++i; i < lines.size(); ++i) {
    std::istringstream f(lines[i]);
    std::string a, b;
    f >> a >> b;
    ++total;
    cross += silo.at(a) != silo.at(b);
  }
  return {cross, total};
}

const std::string kGraphArgs =
    "synth --nodes-per-community 80 --features 8 --illicit-fraction 0.25 --p-intra 0.08 --p-inter 0.004 --seed 3";
const std::string kConfig = "split = random\nhidden = 16\nrounds = 3\nepochs = 2\nseeds = 1, 2\n";

}  // namespace

TEST_CASE("partition subcommand") {
  fgv::testing::TempDir dir;
  const auto g = dir.path() / "g.txt";
  REQUIRE(fgv_cli(kGraphArgs + " --out " + g.string()).code == 0);

  const auto one = fgv_cli("partition --graph " + g.string() + " --k 1");
  CHECK(one.code == 0);
  CHECK(one.out.find("cross-edge fraction  0.000000") != std::string::npos);

  const auto part = dir.path() / "p.tsv";
  REQUIRE(fgv_cli("partition --graph " + g.string() + " --k 3 --out " + part.string()).code == 0);
  const auto stats = dir.path() / "s.json";
  const auto from_file = fgv_cli("partition --graph " + g.string() + " --method file --in " + part.string() +
                                 " --stats-json " + stats.string());
  REQUIRE(from_file.code == 0);
  const auto j = nlohmann::json::parse(slurp(stats.string()));
  const auto [cross, total] = scan_cross_edges(g.string(), part.string());
  CHECK(j["cross_edges"].get<std::size_t>() == cross);
  CHECK(j["edges"].get<std::size_t>() == total);
  CHECK(j["cross_edge_fraction"].get<double>() == doctest::Approx(static_cast<double>(cross) / total));
}

TEST_CASE("train subcommand") {
  fgv::testing::TempDir dir;
  const auto g = dir.path() / "g.txt";
  REQUIRE(fgv_cli(kGraphArgs + " --out " + g.string()).code == 0);
  const auto cfg = dir.write("c.cfg", kConfig);
  const std::string base = "train --graph " + g.string() + " --config " + cfg.string();

  const auto a = fgv_cli(base + " --out-dir " + (dir.path() / "a").string());
  REQUIRE(a.code == 0);
  const auto b = fgv_cli(base + " --out-dir " + (dir.path() / "b").string());
  REQUIRE(b.code == 0);
  const auto csv = slurp((dir.path() / "a" / "metrics.csv").string());
  CHECK(csv == slurp((dir.path() / "b" / "metrics.csv").string()));
  CHECK(lines_of(csv).size() == 1 + 2 * 4);

  const auto manifest = nlohmann::json::parse(slurp((dir.path() / "a" / "manifest.json").string()));
  CHECK(manifest["config"]["rounds"] == "3");
  CHECK(manifest["outputs"]["checkpoints"].size() == 2);
  // git is the independent oracle for the blob hash when it is installed.
  FILE* git = popen(("git hash-object " + g.string() + " 2>/dev/null").c_str(), "r");
  std::array<char, 128> hash{};
  if (git != nullptr && std::fgets(hash.data(), hash.size(), git) != nullptr) {
    CHECK(manifest["inputs"][0]["git_blob_sha1"] == std::string(hash.data(), 40));
  }
  if (git != nullptr) pclose(git);

  const std::string ckpt_path = manifest["outputs"]["checkpoints"]["1"];
  const auto ckpt = fgv::load_checkpoint(std::filesystem::path(ckpt_path));
  CHECK(ckpt.hidden() == 16);
  const auto summary = nlohmann::json::parse(slurp((dir.path() / "a" / "summary.json").string()));
  CHECK(summary["mode"] == "fedgraph");

  const auto zero = fgv_cli(base + " --rounds 0 --mode local --out-dir " + (dir.path() / "z").string());
  REQUIRE(zero.code == 0);
  const auto rows = lines_of(slurp((dir.path() / "z" / "metrics.csv").string()));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].rfind("0,1,local,", 0) == 0);
  CHECK(rows[2].rfind("0,2,local,", 0) == 0);

  const auto audit = fgv_cli("audit --graph " + g.string() + " --config " + cfg.string() + " --checkpoint " +
                             manifest["outputs"]["checkpoints"]["1"].get<std::string>() +
                             " --attacker-epochs 20 --shadow-epochs 20 --out " + (dir.path() / "audit.json").string());
  REQUIRE(audit.code == 0);
  const auto report = nlohmann::json::parse(slurp((dir.path() / "audit.json").string()));
  CHECK(report["inversion"]["r2"].get<double>() <= 1.0);
  CHECK(report["membership_inference"]["auc"].get<double>() >= 0.0);
  CHECK(report["config"]["hidden"] == "16");
}

TEST_CASE("bench-pqc subcommand") {
  const auto r = fgv_cli("bench-pqc --sizes 1,10,100,1000 --width 128 --repeats 5");
  REQUIRE(r.code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] ==
        "batch_size,total_ms,per_embedding_ms,embeddings_per_sec,expansion_ratio,payload_bytes,envelope_bytes");
  double previous = 1e300;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> f;
    std::istringstream in(lines[i]);
    for (std::string cell; std::getline(in, cell, ',');) f.push_back(cell);
    REQUIRE(f.size() == 7);
    const std::size_t rows = std::stoul(f[0]);
    const std::size_t payload = 4 + rows * (8 + 4 * 128);
    CHECK(std::stoul(f[5]) == payload);
    CHECK(std::stoul(f[6]) == payload + 4 + 2 + 2 + 4 + 768 + 12 + 4 + 16);
    const double per = std::stod(f[2]);
    CHECK(per < previous);
    previous = per;
  }
}

TEST_CASE("exit codes") {
  CHECK(fgv_cli("").code == 1);
  CHECK(fgv_cli("train --no-such-flag").code == 1);
  CHECK(fgv_cli("partition --graph /nonexistent/g.txt").code == 2);
  fgv::testing::TempDir dir;
  const auto g = dir.path() / "g.txt";
  REQUIRE(fgv_cli(kGraphArgs + " --out " + g.string()).code == 0);
  CHECK(fgv_cli("train --graph " + g.string() + " --mode sideways").code == 1);
  CHECK(fgv_cli("train --graph " + g.string() + " --lambda -1").code == 1);
  const auto bad = dir.write("bad.tsv", "0\t0\n");
  CHECK(fgv_cli("partition --graph " + g.string() + " --method file --in " + bad.string()).code == 2);
}
