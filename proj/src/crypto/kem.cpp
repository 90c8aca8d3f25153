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

#include <mutex>
#include <optional>

#include <openssl/crypto.h>
#include <openssl/rand.h>

extern "C" {
#include "fips202.h"
#include "kem.h"
}

#include "../common/bytes.hpp"
#include "fgv/crypto.hpp"
#include "fgv/error.hpp"

static_assert(PQCLEAN_MLKEM512_CLEAN_CRYPTO_PUBLICKEYBYTES == fgv::kPublicKeyBytes);
static_assert(PQCLEAN_MLKEM512_CLEAN_CRYPTO_SECRETKEYBYTES == fgv::kSecretKeyBytes);
static_assert(PQCLEAN_MLKEM512_CLEAN_CRYPTO_CIPHERTEXTBYTES == fgv::kKemCiphertextBytes);
static_assert(PQCLEAN_MLKEM512_CLEAN_CRYPTO_BYTES == fgv::kSharedSecretBytes);

// PQClean's non-derandomised entry points call this; ours never do, but the
// symbol must resolve.
extern "C" int randombytes(uint8_t* buf, size_t n) {
  while (n > 0) {
    const int chunk = n > (1u << 30) ? (1 << 30) : static_cast<int>(n);
    if (RAND_bytes(buf, chunk) != 1) return -1;
    buf += chunk;
    n -= static_cast<size_t>(chunk);
  }
  return 0;
}

namespace fgv {

struct EntropySource::State {
  std::mutex mu;
  std::optional<shake256incctx> shake;

  ~State() {
    if (shake) shake256_inc_ctx_release(&*shake);
  }
};

EntropySource EntropySource::system() { return EntropySource(std::make_shared<State>()); }

EntropySource EntropySource::seeded(std::uint64_t seed) {
  auto state = std::make_shared<State>();
  state->shake.emplace();
  shake256_inc_init(&*state->shake);
  std::vector<std::uint8_t> input{'f', 'g', 'v', '-', 'e', 'n', 't', 'r', 'o', 'p', 'y'};
  bytes::put_le(input, seed);
  shake256_inc_absorb(&*state->shake, input.data(), input.size());
  shake256_inc_finalize(&*state->shake);
  return EntropySource(std::move(state));
}

bool EntropySource::is_seeded() const { return state_->shake.has_value(); }

void EntropySource::fill(std::span<std::uint8_t> out) {
  std::lock_guard lock(state_->mu);
  if (state_->shake) {
    shake256_inc_squeeze(out.data(), out.size(), &*state_->shake);
    return;
  }
  if (randombytes(out.data(), out.size()) != 0) throw CryptoError("system entropy source failed");
}

SecretBytes::~SecretBytes() {
  if (!bytes_.empty()) OPENSSL_cleanse(bytes_.data(), bytes_.size());
}

KemKeyPair kem_keygen(EntropySource& entropy) {
  SecretBytes coins(64);
  entropy.fill(coins.view());
  KemKeyPair kp{std::vector<std::uint8_t>(kPublicKeyBytes), SecretBytes(kSecretKeyBytes)};
  if (PQCLEAN_MLKEM512_CLEAN_crypto_kem_keypair_derand(kp.public_key.data(), kp.secret_key.data(), coins.data()) != 0) {
    throw CryptoError("ML-KEM-512 key generation failed");
  }
  return kp;
}

Encapsulation kem_encapsulate(std::span<const std::uint8_t> public_key, EntropySource& entropy) {
  if (public_key.size() != kPublicKeyBytes) throw CryptoError("ML-KEM-512 public key must be 800 bytes");
  SecretBytes coins(32);
  entropy.fill(coins.view());
  Encapsulation e{std::vector<std::uint8_t>(kKemCiphertextBytes), SecretBytes(kSharedSecretBytes)};
  if (PQCLEAN_MLKEM512_CLEAN_crypto_kem_enc_derand(e.ciphertext.data(), e.shared_secret.data(), public_key.data(),
                                                  coins.data()) != 0) {
    throw CryptoError("ML-KEM-512 encapsulation failed");
  }
  return e;
}

SecretBytes kem_decapsulate(std::span<const std::uint8_t> secret_key, std::span<const std::uint8_t> ciphertext) {
  if (secret_key.size() != kSecretKeyBytes) throw CryptoError("ML-KEM-512 secret key must be 1632 bytes");
  if (ciphertext.size() != kKemCiphertextBytes) throw CryptoError("ML-KEM-512 ciphertext must be 768 bytes");
  SecretBytes ss(kSharedSecretBytes);
  if (PQCLEAN_MLKEM512_CLEAN_crypto_kem_dec(ss.data(), ciphertext.data(), secret_key.data()) != 0) {
    throw CryptoError("ML-KEM-512 decapsulation failed");
  }
  return ss;
}

}  // namespace fgv
