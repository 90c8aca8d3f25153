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
#include <array>
#include <memory>

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include "fgv/crypto.hpp"
#include "fgv/error.hpp"

namespace fgv {

namespace {

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

CipherCtx init(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce, bool encrypt) {
  if (key.size() != kSharedSecretBytes) throw CryptoError("AES-256-GCM key must be 32 bytes");
  if (nonce.size() != kNonceBytes) throw CryptoError("AES-256-GCM nonce must be 12 bytes");
  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx) throw CryptoError("EVP_CIPHER_CTX_new failed");
  const auto init_fn = encrypt ? EVP_EncryptInit_ex : EVP_DecryptInit_ex;
  if (init_fn(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(kNonceBytes), nullptr) != 1 ||
      init_fn(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) {
    throw CryptoError("AES-256-GCM initialisation failed");
  }
  return ctx;
}

int checked_len(std::size_t n) {
  if (n > static_cast<std::size_t>(INT32_MAX)) throw CryptoError("AEAD input too large");
  return static_cast<int>(n);
}

}  // namespace

std::vector<std::uint8_t> aead_seal(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce,
                                    std::span<const std::uint8_t> associated_data,
                                    std::span<const std::uint8_t> plaintext) {
  auto ctx = init(key, nonce, true);
  std::vector<std::uint8_t> out(plaintext.size() + kTagBytes);
  int len = 0;
  if (!associated_data.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, associated_data.data(), checked_len(associated_data.size())) != 1) {
    throw CryptoError("AES-256-GCM associated data failed");
  }
  int written = 0;
  if (!plaintext.empty()) {
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(), checked_len(plaintext.size())) != 1) {
      throw CryptoError("AES-256-GCM encryption failed");
    }
    written = len;
  }
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + written, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kTagBytes),
                          out.data() + plaintext.size()) != 1) {
    throw CryptoError("AES-256-GCM finalisation failed");
  }
  return out;
}

std::vector<std::uint8_t> aead_open(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce,
                                    std::span<const std::uint8_t> associated_data,
                                    std::span<const std::uint8_t> sealed) {
  if (sealed.size() < kTagBytes) throw AuthenticationError("AEAD ciphertext shorter than its tag");
  const std::size_t n = sealed.size() - kTagBytes;
  auto ctx = init(key, nonce, false);
  std::vector<std::uint8_t> out(n);
  int len = 0;
  if (!associated_data.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, associated_data.data(), checked_len(associated_data.size())) != 1) {
    throw CryptoError("AES-256-GCM associated data failed");
  }
  int written = 0;
  if (n > 0) {
    if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(), checked_len(n)) != 1) {
      throw CryptoError("AES-256-GCM decryption failed");
    }
    written = len;
  }
  std::array<std::uint8_t, kTagBytes> tag;
  std::copy(sealed.end() - kTagBytes, sealed.end(), tag.begin());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kTagBytes), tag.data()) != 1) {
    throw CryptoError("AES-256-GCM tag setup failed");
  }
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + written, &len) != 1) {
    OPENSSL_cleanse(out.data(), out.size());
    throw AuthenticationError("AEAD tag verification failed");
  }
  return out;
}

}  // namespace fgv
