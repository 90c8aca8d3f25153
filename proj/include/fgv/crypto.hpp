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

// Hybrid KEM-DEM tunnel: ML-KEM-512 encapsulation per envelope, the 32-byte
// shared secret used directly as an AES-256-GCM key.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fgv/gnn.hpp"

namespace fgv {

inline constexpr std::size_t kPublicKeyBytes = 800;
inline constexpr std::size_t kSecretKeyBytes = 1632;
inline constexpr std::size_t kKemCiphertextBytes = 768;
inline constexpr std::size_t kSharedSecretBytes = 32;
inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kTagBytes = 16;
/// magic | sender u16 | recipient u16 | round u32; also the AEAD associated data.
inline constexpr std::size_t kAssociatedDataBytes = 12;
inline constexpr std::size_t kEnvelopeHeaderBytes = kAssociatedDataBytes + kKemCiphertextBytes + kNonceBytes + 4;
/// Bytes an envelope adds on top of its plaintext payload.
inline constexpr std::size_t kEnvelopeOverheadBytes = kEnvelopeHeaderBytes + kTagBytes;
inline constexpr std::array<std::uint8_t, 4> kEnvelopeMagic = {'F', 'G', 'V', '1'};

/// Randomness for key generation and encapsulation. The system source reads
/// the OS CSPRNG; the seeded source is a SHAKE256 stream for reproducible
/// tests and simulations. Thread-safe.
class EntropySource {
 public:
  static EntropySource system();
  static EntropySource seeded(std::uint64_t seed);

  /// Throws CryptoError if the underlying generator fails.
  void fill(std::span<std::uint8_t> out);
  bool is_seeded() const;

 private:
  struct State;
  explicit EntropySource(std::shared_ptr<State> state) : state_(std::move(state)) {}
  std::shared_ptr<State> state_;
};

/// Byte buffer wiped on destruction.
class SecretBytes {
 public:
  SecretBytes() = default;
  explicit SecretBytes(std::size_t n) : bytes_(n) {}
  SecretBytes(const SecretBytes&) = default;
  SecretBytes& operator=(const SecretBytes&) = default;
  SecretBytes(SecretBytes&&) noexcept = default;
  SecretBytes& operator=(SecretBytes&&) noexcept = default;
  ~SecretBytes();

  std::size_t size() const { return bytes_.size(); }
  std::uint8_t* data() { return bytes_.data(); }
  const std::uint8_t* data() const { return bytes_.data(); }
  std::span<const std::uint8_t> view() const { return bytes_; }
  std::span<std::uint8_t> view() { return bytes_; }
  friend bool operator==(const SecretBytes& a, const SecretBytes& b) { return a.bytes_ == b.bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

struct KemKeyPair {
  std::vector<std::uint8_t> public_key;  ///< kPublicKeyBytes
  SecretBytes secret_key;                ///< kSecretKeyBytes
};

struct Encapsulation {
  std::vector<std::uint8_t> ciphertext;  ///< kKemCiphertextBytes
  SecretBytes shared_secret;             ///< kSharedSecretBytes
};

KemKeyPair kem_keygen(EntropySource& entropy);
Encapsulation kem_encapsulate(std::span<const std::uint8_t> public_key, EntropySource& entropy);
/// Implicit rejection: a ciphertext not made for this key yields an
/// unrelated secret rather than an error.
SecretBytes kem_decapsulate(std::span<const std::uint8_t> secret_key, std::span<const std::uint8_t> ciphertext);

/// AES-256-GCM; the result is ciphertext followed by the 16-byte tag.
std::vector<std::uint8_t> aead_seal(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce,
                                    std::span<const std::uint8_t> associated_data,
                                    std::span<const std::uint8_t> plaintext);
/// Throws AuthenticationError when the tag does not verify.
std::vector<std::uint8_t> aead_open(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce,
                                    std::span<const std::uint8_t> associated_data,
                                    std::span<const std::uint8_t> sealed);

/// One encrypted EmbeddingBatch in transit. Wire layout (little-endian):
/// "FGV1" | sender u16 | recipient u16 | round u32 | kem_ct[768] |
/// nonce[12] | payload_len u32 | aead_ciphertext[payload_len + 16].
struct SecureEnvelope {
  SiloId sender = 0;
  SiloId recipient = 0;
  std::uint32_t round = 0;
  std::array<std::uint8_t, kKemCiphertextBytes> kem_ciphertext{};
  std::array<std::uint8_t, kNonceBytes> nonce{};
  std::vector<std::uint8_t> aead_ciphertext;

  std::size_t payload_bytes() const { return aead_ciphertext.size() - kTagBytes; }
  std::size_t wire_bytes() const { return kEnvelopeHeaderBytes + aead_ciphertext.size(); }
  std::array<std::uint8_t, kAssociatedDataBytes> associated_data() const;

  std::vector<std::uint8_t> to_bytes() const;
  /// Structural failures (bad magic, truncation, length mismatch) throw
  /// AuthenticationError so callers drop the envelope like a bad tag.
  static SecureEnvelope from_bytes(std::span<const std::uint8_t> wire);
};

/// Fresh encapsulation against `recipient_pk`, nonce counter 0 under the
/// new key, header bytes bound as associated data.
SecureEnvelope encrypt_batch(std::span<const std::uint8_t> recipient_pk, const EmbeddingBatch& batch,
                             SiloId sender, SiloId recipient, std::uint32_t round, EntropySource& entropy);
/// Throws AuthenticationError on any tampering or a key mismatch.
EmbeddingBatch decrypt_batch(std::span<const std::uint8_t> secret_key, const SecureEnvelope& envelope);

/// Audit trail of envelopes created in a session. Rejects an envelope whose
/// (KEM ciphertext, nonce) pair was already seen, i.e. a reused key/nonce.
class EnvelopeLog {
 public:
  struct Entry {
    SiloId sender;
    SiloId recipient;
    std::uint32_t round;
    std::size_t rows;
    std::size_t payload_bytes;
    std::size_t wire_bytes;
  };

  void record(const SecureEnvelope& envelope, std::size_t rows);
  std::span<const Entry> entries() const { return entries_; }
  std::size_t total_payload_bytes() const;
  std::size_t total_wire_bytes() const;
  void clear();

 private:
  std::vector<Entry> entries_;
  std::vector<std::array<std::uint8_t, kKemCiphertextBytes + kNonceBytes>> seen_;
};

struct OverheadRow {
  std::size_t batch_size = 0;
  double total_ms = 0;  ///< median wall time to serialise + encrypt one envelope
  double per_embedding_ms = 0;
  double embeddings_per_sec = 0;
  double expansion_ratio = 0;  ///< envelope bytes / payload bytes
  std::size_t payload_bytes = 0;
  std::size_t envelope_bytes = 0;
};

struct OverheadOptions {
  std::size_t width = kDefaultHidden;
  std::size_t repeats = 5;
  std::uint64_t seed = 42;
};

/// Times encrypt_batch on random batches of each size against one key pair.
std::vector<OverheadRow> measure_overhead(std::span<const std::size_t> batch_sizes,
                                          const OverheadOptions& options = {});

}  // namespace fgv
