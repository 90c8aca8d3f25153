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
#include <chrono>
#include <cstring>
#include <random>

#include <fmt/format.h>

#include "../common/bytes.hpp"
#include "fgv/crypto.hpp"
#include "fgv/error.hpp"

namespace fgv {

std::array<std::uint8_t, kAssociatedDataBytes> SecureEnvelope::associated_data() const {
  std::array<std::uint8_t, kAssociatedDataBytes> ad{};
  std::copy(kEnvelopeMagic.begin(), kEnvelopeMagic.end(), ad.begin());
  for (std::size_t i = 0; i < 2; ++i) {
    ad[4 + i] = static_cast<std::uint8_t>(sender >> (8 * i));
    ad[6 + i] = static_cast<std::uint8_t>(recipient >> (8 * i));
  }
  for (std::size_t i = 0; i < 4; ++i) ad[8 + i] = static_cast<std::uint8_t>(round >> (8 * i));
  return ad;
}

std::vector<std::uint8_t> SecureEnvelope::to_bytes() const {
  if (aead_ciphertext.size() < kTagBytes) throw CryptoError("envelope has no AEAD tag");
  if (payload_bytes() > UINT32_MAX) throw CryptoError("envelope payload too large");
  const auto ad = associated_data();
  std::vector<std::uint8_t> out(ad.begin(), ad.end());
  out.reserve(wire_bytes());
  out.insert(out.end(), kem_ciphertext.begin(), kem_ciphertext.end());
  out.insert(out.end(), nonce.begin(), nonce.end());
  bytes::put_le(out, static_cast<std::uint32_t>(payload_bytes()));
  out.insert(out.end(), aead_ciphertext.begin(), aead_ciphertext.end());
  return out;
}

SecureEnvelope SecureEnvelope::from_bytes(std::span<const std::uint8_t> wire) {
  if (wire.size() < kEnvelopeOverheadBytes) throw AuthenticationError("envelope truncated");
  bytes::Reader in(wire);
  const auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), kEnvelopeMagic.begin())) {
    throw AuthenticationError("envelope magic mismatch");
  }
  SecureEnvelope env;
  env.sender = in.le<std::uint16_t>();
  env.recipient = in.le<std::uint16_t>();
  env.round = in.le<std::uint32_t>();
  const auto ct = in.take(kKemCiphertextBytes);
  std::copy(ct.begin(), ct.end(), env.kem_ciphertext.begin());
  const auto nonce = in.take(kNonceBytes);
  std::copy(nonce.begin(), nonce.end(), env.nonce.begin());
  const auto payload_len = in.le<std::uint32_t>();
  if (in.remaining() != static_cast<std::size_t>(payload_len) + kTagBytes) {
    throw AuthenticationError("envelope length field does not match its body");
  }
  const auto body = in.take(in.remaining());
  env.aead_ciphertext.assign(body.begin(), body.end());
  return env;
}

SecureEnvelope encrypt_batch(std::span<const std::uint8_t> recipient_pk, const EmbeddingBatch& batch,
                             SiloId sender, SiloId recipient, std::uint32_t round, EntropySource& entropy) {
  auto payload = serialize_batch(batch);
  auto encap = kem_encapsulate(recipient_pk, entropy);
  SecureEnvelope env;
  env.sender = sender;
  env.recipient = recipient;
  env.round = round;
  std::copy(encap.ciphertext.begin(), encap.ciphertext.end(), env.kem_ciphertext.begin());
  // Nonce counter starts at 0 for each fresh key; every key seals exactly one envelope.
  std::uint64_t counter = 0;
  for (std::size_t i = 0; i < 8; ++i) env.nonce[i] = static_cast<std::uint8_t>(counter >> (8 * i));
  const auto ad = env.associated_data();
  env.aead_ciphertext = aead_seal(encap.shared_secret.view(), env.nonce, ad, payload);
  std::fill(payload.begin(), payload.end(), 0);
  return env;
}

EmbeddingBatch decrypt_batch(std::span<const std::uint8_t> secret_key, const SecureEnvelope& envelope) {
  const auto key = kem_decapsulate(secret_key, envelope.kem_ciphertext);
  const auto ad = envelope.associated_data();
  auto plain = aead_open(key.view(), envelope.nonce, ad, envelope.aead_ciphertext);
  try {
    auto batch = deserialize_batch(plain, envelope.round, envelope.sender);
    std::fill(plain.begin(), plain.end(), 0);
    return batch;
  } catch (const DataError& e) {
    throw AuthenticationError(std::string("authenticated payload is malformed: ") + e.what());
  }
}

void EnvelopeLog::record(const SecureEnvelope& envelope, std::size_t rows) {
  std::array<std::uint8_t, kKemCiphertextBytes + kNonceBytes> key;
  std::copy(envelope.kem_ciphertext.begin(), envelope.kem_ciphertext.end(), key.begin());
  std::copy(envelope.nonce.begin(), envelope.nonce.end(), key.begin() + kKemCiphertextBytes);
  const auto it = std::lower_bound(seen_.begin(), seen_.end(), key);
  if (it != seen_.end() && *it == key) {
    throw CryptoError(fmt::format("nonce reuse: envelope {}->{} round {} repeats a key/nonce pair",
                                  envelope.sender, envelope.recipient, envelope.round));
  }
  seen_.insert(it, key);
  entries_.push_back({envelope.sender, envelope.recipient, envelope.round, rows, envelope.payload_bytes(),
                      envelope.wire_bytes()});
}

std::size_t EnvelopeLog::total_payload_bytes() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.payload_bytes;
  return n;
}

std::size_t EnvelopeLog::total_wire_bytes() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.wire_bytes;
  return n;
}

void EnvelopeLog::clear() {
  entries_.clear();
  seen_.clear();
}

std::vector<OverheadRow> measure_overhead(std::span<const std::size_t> batch_sizes, const OverheadOptions& options) {
  if (options.repeats == 0) throw InvalidArgument("measure_overhead: repeats must be positive");
  auto entropy = EntropySource::seeded(options.seed);
  const auto keys = kem_keygen(entropy);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<float> gauss;
  std::vector<OverheadRow> rows;
  for (std::size_t size : batch_sizes) {
    EmbeddingBatch batch;
    batch.node_ids.resize(size);
    for (std::size_t i = 0; i < size; ++i) batch.node_ids[i] = i;
    batch.vectors.resize(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(options.width));
    for (Eigen::Index i = 0; i < batch.vectors.size(); ++i) batch.vectors.data()[i] = gauss(rng);

    std::vector<double> ms;
    SecureEnvelope env;
    for (std::size_t r = 0; r < options.repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      env = encrypt_batch(keys.public_key, batch, 0, 1, static_cast<std::uint32_t>(r), entropy);
      ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
    }
    std::sort(ms.begin(), ms.end());
    OverheadRow row;
    row.batch_size = size;
    row.total_ms = ms.size() % 2 == 1 ? ms[ms.size() / 2] : 0.5 * (ms[ms.size() / 2 - 1] + ms[ms.size() / 2]);
    row.payload_bytes = env.payload_bytes();
    row.envelope_bytes = env.wire_bytes();
    row.expansion_ratio = static_cast<double>(row.envelope_bytes) / static_cast<double>(row.payload_bytes);
    if (size > 0) {
      row.per_embedding_ms = row.total_ms / static_cast<double>(size);
      row.embeddings_per_sec = row.total_ms > 0 ? 1000.0 * static_cast<double>(size) / row.total_ms : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fgv
