// Copyright 2026 The espnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "espnet/random.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <algorithm>
#include <stdexcept>

namespace espnet {

std::uint32_t RandomSource::next_u32() {
  std::array<std::uint8_t, 4> b{};
  fill(b);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::uint64_t RandomSource::next_u64() {
  return (std::uint64_t{next_u32()} << 32) | next_u32();
}

SeededRandom::SeededRandom(std::uint64_t seed) {
  std::array<std::uint8_t, 8> seed_bytes{};
  for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  std::array<std::uint8_t, SHA256_DIGEST_LENGTH> digest{};
  SHA256(seed_bytes.data(), seed_bytes.size(), digest.data());
  std::copy_n(digest.begin(), 16, key_.begin());
  std::copy_n(digest.begin() + 16, 16, counter_.begin());
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
  for (auto& byte : out) {
    if (block_used_ == block_.size()) {
      EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
      int len = 0;
      bool ok = ctx && EVP_EncryptInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key_.data(), nullptr) == 1 &&
                EVP_CIPHER_CTX_set_padding(ctx, 0) == 1 &&
                EVP_EncryptUpdate(ctx, block_.data(), &len, counter_.data(), 16) == 1;
      EVP_CIPHER_CTX_free(ctx);
      if (!ok) throw std::runtime_error("AES keystream generation failed");
      for (int i = 15; i >= 0 && ++counter_[i] == 0; --i) {
      }
      block_used_ = 0;
    }
    byte = block_[block_used_++];
  }
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
}

}  // namespace espnet
