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

#include <cstring>
#include <random>
#include <thread>

#include <doctest.h>

#include "fgv/crypto.hpp"
#include "fgv/error.hpp"

using namespace fgv;

namespace {

std::vector<std::uint8_t> unhex(std::string_view s) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(std::stoi(std::string(s.substr(i, 2)), nullptr, 16)));
  }
  return out;
}

EmbeddingBatch random_batch(std::size_t rows, std::size_t width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  EmbeddingBatch b;
  for (std::size_t i = 0; i < rows; ++i) b.node_ids.push_back(rng());
  b.vectors.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < b.vectors.size(); ++i) b.vectors.data()[i] = g(rng);
  return b;
}

bool same_batch(const EmbeddingBatch& a, const EmbeddingBatch& b) {
  return a.node_ids == b.node_ids && a.vectors.rows() == b.vectors.rows() &&
         std::memcmp(a.vectors.data(), b.vectors.data(), sizeof(float) * a.vectors.size()) == 0;
}

}  // namespace

TEST_CASE("KEM sizes and correctness") {
  auto entropy = EntropySource::system();
  const auto kp = kem_keygen(entropy);
  CHECK(kp.public_key.size() == 800);
  CHECK(kp.secret_key.size() == 1632);
  const auto other = kem_keygen(entropy);
  CHECK(other.public_key != kp.public_key);

  const auto enc = kem_encapsulate(kp.public_key, entropy);
  CHECK(enc.ciphertext.size() == 768);
  CHECK(enc.shared_secret.size() == 32);
  CHECK(kem_decapsulate(kp.secret_key.view(), enc.ciphertext) == enc.shared_secret);
  // Implicit rejection: the wrong key decapsulates to something else.
  CHECK(!(kem_decapsulate(other.secret_key.view(), enc.ciphertext) == enc.shared_secret));

  CHECK_THROWS_AS(kem_encapsulate(std::vector<std::uint8_t>(799), entropy), CryptoError);
}

TEST_CASE("KEM agrees across 1,000 key pairs") {
  auto entropy = EntropySource::seeded(2024);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto kp = kem_keygen(entropy);
    const auto enc = kem_encapsulate(kp.public_key, entropy);
    agree += kem_decapsulate(kp.secret_key.view(), enc.ciphertext) == enc.shared_secret;
  }
  CHECK(agree == 1000);
}

TEST_CASE("seeded entropy is reproducible") {
  auto a = EntropySource::seeded(5);
  auto b = EntropySource::seeded(5);
  auto c = EntropySource::seeded(6);
  CHECK(kem_keygen(a).public_key == kem_keygen(b).public_key);
  CHECK(kem_keygen(a).public_key != kem_keygen(c).public_key);
  CHECK(a.is_seeded());
  CHECK(!EntropySource::system().is_seeded());
}

TEST_CASE("AES-256-GCM known-answer vectors") {
  const auto key = std::vector<std::uint8_t>(32, 0);
  const auto iv = std::vector<std::uint8_t>(12, 0);
  CHECK(aead_seal(key, iv, {}, {}) == unhex("530f8afbc74536b9a963b4f1c4cb738b"));
  CHECK(aead_seal(key, iv, {}, std::vector<std::uint8_t>(16, 0)) ==
        unhex("cea7403d4d606b6e074ec5d3baf39d18d0d1c8a799996bf0265b98b5d48ab919"));
  const auto pt = std::vector<std::uint8_t>{1, 2, 3};
  const auto ad = std::vector<std::uint8_t>{9, 9};
  const auto sealed = aead_seal(key, iv, ad, pt);
  CHECK(aead_open(key, iv, ad, sealed) == pt);
  CHECK_THROWS_AS(aead_open(key, iv, {}, sealed), AuthenticationError);
  CHECK_THROWS_AS(aead_open(key, iv, ad, std::vector<std::uint8_t>(5)), AuthenticationError);
}

TEST_CASE("envelopes round-trip and have the documented layout") {
  auto entropy = EntropySource::seeded(1);
  const auto kp = kem_keygen(entropy);
  const auto batch = random_batch(1000, 128, 3);
  const auto env = encrypt_batch(kp.public_key, batch, 2, 5, 77, entropy);
  CHECK(env.kem_ciphertext.size() == 768);
  CHECK(env.aead_ciphertext.size() == serialized_batch_size(1000, 128) + 16);
  CHECK(same_batch(decrypt_batch(kp.secret_key.view(), env), batch));

  const auto wire = env.to_bytes();
  CHECK(wire.size() == env.wire_bytes());
  CHECK(wire.size() == env.payload_bytes() + kEnvelopeOverheadBytes);
  CHECK(kEnvelopeOverheadBytes == 4 + 2 + 2 + 4 + 768 + 12 + 4 + 16);
  CHECK(std::string(wire.begin(), wire.begin() + 4) == "FGV1");
  CHECK(wire[4] == 2);
  CHECK(wire[6] == 5);
  CHECK(wire[8] == 77);
  CHECK(std::equal(env.kem_ciphertext.begin(), env.kem_ciphertext.end(), wire.begin() + 12));
  CHECK(std::equal(env.nonce.begin(), env.nonce.end(), wire.begin() + 780));
  const std::uint32_t len = wire[792] | wire[793] << 8 | wire[794] << 16 | wire[795] << 24;
  CHECK(len == env.payload_bytes());

  const auto back = SecureEnvelope::from_bytes(wire);
  CHECK(back.to_bytes() == wire);
  CHECK(same_batch(decrypt_batch(kp.secret_key.view(), back), batch));

  auto short_wire = wire;
  short_wire.pop_back();
  CHECK_THROWS_AS(SecureEnvelope::from_bytes(short_wire), AuthenticationError);
  auto bad_magic = wire;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(SecureEnvelope::from_bytes(bad_magic), AuthenticationError);
}

TEST_CASE("empty batch seals to count field plus tag") {
  auto entropy = EntropySource::seeded(2);
  const auto kp = kem_keygen(entropy);
  const auto env = encrypt_batch(kp.public_key, EmbeddingBatch{}, 0, 1, 1, entropy);
  CHECK(env.aead_ciphertext.size() == 4 + 16);
  CHECK(decrypt_batch(kp.secret_key.view(), env).size() == 0);
}

TEST_CASE("tampering and wrong keys are rejected") {
  auto entropy = EntropySource::seeded(3);
  const auto kp = kem_keygen(entropy);
  const auto other = kem_keygen(entropy);
  const auto batch = random_batch(4, 8, 4);
  const auto env = encrypt_batch(kp.public_key, batch, 0, 1, 3, entropy);

  CHECK_THROWS_AS(decrypt_batch(other.secret_key.view(), env), AuthenticationError);

  auto flip_payload = env;
  flip_payload.aead_ciphertext[5] ^= 0x10;
  CHECK_THROWS_AS(decrypt_batch(kp.secret_key.view(), flip_payload), AuthenticationError);
  auto flip_tag = env;
  flip_tag.aead_ciphertext.back() ^= 1;
  CHECK_THROWS_AS(decrypt_batch(kp.secret_key.view(), flip_tag), AuthenticationError);
  auto round = env;
  round.round = 4;
  CHECK_THROWS_AS(decrypt_batch(kp.secret_key.view(), round), AuthenticationError);
  auto sender = env;
  sender.sender = 2;
  CHECK_THROWS_AS(decrypt_batch(kp.secret_key.view(), sender), AuthenticationError);
  auto kem = env;
  kem.kem_ciphertext[100] ^= 4;
  CHECK_THROWS_AS(decrypt_batch(kp.secret_key.view(), kem), AuthenticationError);
  auto nonce = env;
  nonce.nonce[0] ^= 1;
  CHECK_THROWS_AS(decrypt_batch(kp.secret_key.view(), nonce), AuthenticationError);
}

TEST_CASE("concurrent encryption from several threads") {
  auto entropy = EntropySource::system();
  const auto kp = kem_keygen(entropy);
  std::vector<SecureEnvelope> envs(4);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < envs.size(); ++t) {
    threads.emplace_back([&, t] {
      envs[t] = encrypt_batch(kp.public_key, random_batch(50, 16, t), static_cast<SiloId>(t), 9, 1, entropy);
    });
  }
  for (auto& th : threads) th.join();
  for (std::size_t t = 0; t < envs.size(); ++t) {
    CHECK(same_batch(decrypt_batch(kp.secret_key.view(), envs[t]), random_batch(50, 16, t)));
  }
}

TEST_CASE("envelope log rejects a repeated key/nonce pair") {
  auto entropy = EntropySource::seeded(8);
  const auto kp = kem_keygen(entropy);
  EnvelopeLog log;
  const auto a = encrypt_batch(kp.public_key, random_batch(3, 4, 1), 0, 1, 1, entropy);
  const auto b = encrypt_batch(kp.public_key, random_batch(3, 4, 1), 0, 1, 1, entropy);
  log.record(a, 3);
  log.record(b, 3);
  CHECK_THROWS_AS(log.record(a, 3), CryptoError);
  CHECK(log.entries().size() == 2);
  CHECK(log.total_payload_bytes() == 2 * serialized_batch_size(3, 4));
  CHECK(log.total_wire_bytes() == log.total_payload_bytes() + 2 * kEnvelopeOverheadBytes);
}

TEST_CASE("measure_overhead") {
  const std::vector<std::size_t> sizes{1, 10, 100, 1000};
  const auto rows = measure_overhead(sizes, {128, 3, 1});
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].payload_bytes == 4 + sizes[i] * (8 + 128 * 4));
    CHECK(rows[i].envelope_bytes == rows[i].payload_bytes + 812);
    CHECK(rows[i].expansion_ratio ==
          doctest::Approx(double(rows[i].envelope_bytes) / double(rows[i].payload_bytes)));
    if (i > 0) CHECK(rows[i].expansion_ratio < rows[i - 1].expansion_ratio);
  }
  CHECK(rows[3].total_ms < 1000.0);
}
